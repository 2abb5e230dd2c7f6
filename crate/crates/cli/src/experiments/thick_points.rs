//! Exceedance-set areas across dimensions with the fitted decay slope.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::{Payload, ThickPointsPayload};
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::ensembles::EnsembleSpec;
use gmclab_core::mc;
use gmclab_core::stats::ls_slope;

pub struct ThickPoints;

impl Experiment for ThickPoints {
    fn kind(&self) -> &'static str {
        "thick-points"
    }

    fn describe(&self) -> &'static str {
        "area of {Phi >= nu ln N} across dimensions with the fitted \
         log-log slope (params: nu, n_values, region, resolution, draws)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::ThickPoints(p) = &cfg.params else {
            bail!("config does not carry thick-points parameters");
        };
        if p.n_values.len() < 2 {
            bail!("need at least two dimensions to fit a slope");
        }
        if !(0.0..1.0 / std::f64::consts::SQRT_2).contains(&p.nu) {
            bail!("nu must lie in [0, 1/sqrt(2))");
        }
        if p.draws == 0 {
            bail!("draws must be positive");
        }
        Ok(())
    }

    fn run(&self, cfg: &ResolvedConfig, _ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::ThickPoints(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let mut areas = Vec::new();
        for &n in &p.n_values {
            let spec = EnsembleSpec::new(cfg.ensemble.class, cfg.ensemble.law, n)?;
            let scan = mc::scan_field(&spec, p.region, p.resolution, p.draws, cfg.master_seed)?;
            areas.push((n, mc::thick_points(&scan, p.nu)));
        }
        let xs: Vec<f64> = areas.iter().map(|(n, _)| (*n as f64).ln()).collect();
        let ys: Vec<f64> = areas
            .iter()
            .map(|(_, a)| a.max(f64::MIN_POSITIVE).ln())
            .collect();
        let slope = ls_slope(&xs, &ys);
        Ok(Payload::ThickPoints(ThickPointsPayload {
            nu: p.nu,
            areas,
            slope,
            expected_slope: -2.0 * p.nu * p.nu,
        }))
    }
}
