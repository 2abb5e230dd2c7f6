//! Deterministic density report: profile, edge, centerings, quantiles.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::{MdeReportPayload, Payload};
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::mde;
use num_complex::Complex64;
use std::io::Write;

pub struct MdeReport;

impl Experiment for MdeReport {
    fn kind(&self) -> &'static str {
        "mde-report"
    }

    fn describe(&self) -> &'static str {
        "deterministic density profile, edge, centering integrals, and \
         quantiles at one z (params: z, resolution, quantiles, etas)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::MdeReport(p) = &cfg.params else {
            bail!("config does not carry mde-report parameters");
        };
        if p.resolution < 8 {
            bail!("resolution must be at least 8");
        }
        let z = Complex64::new(p.z[0], p.z[1]);
        if z.norm() > 0.99 {
            bail!("|z| must be at most 0.99");
        }
        if p.etas.iter().any(|&e| e < 0.0) {
            bail!("etas must be nonnegative");
        }
        Ok(())
    }

    fn run(&self, cfg: &ResolvedConfig, _ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::MdeReport(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let z = Complex64::new(p.z[0], p.z[1]);
        let profile = mde::density(z, p.resolution)?;
        let quantiles = match p.quantiles {
            Some(n) => mde::quantiles(&profile, n)?,
            None => Vec::new(),
        };
        let centerings = p
            .etas
            .iter()
            .map(|&eta| mde::centering_integral(z, eta))
            .collect::<gmclab_core::Result<Vec<_>>>()?;
        let csv = cfg.output.with_extension("density.csv");
        let mut f = std::fs::File::create(&csv)?;
        writeln!(f, "x,rho")?;
        for (x, r) in &profile.grid {
            writeln!(f, "{x},{r}")?;
        }
        Ok(Payload::MdeReport(MdeReportPayload {
            z: p.z,
            edge: profile.edge,
            rho0: profile.grid.first().map_or(0.0, |g| g.1),
            density: profile.grid,
            centerings,
            quantiles,
            csv,
        }))
    }
}
