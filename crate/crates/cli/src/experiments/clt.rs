//! Joint normality of the normalized log-determinant vector.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::{CltPayload, Payload};
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::mc;
use num_complex::Complex64;

pub struct Clt;

impl Experiment for Clt {
    fn kind(&self) -> &'static str {
        "clt"
    }

    fn describe(&self) -> &'static str {
        "sample covariance of normalized log-determinants vs the predicted \
         covariance (params: points, draws)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::Clt(p) = &cfg.params else {
            bail!("config does not carry clt parameters");
        };
        if p.points.is_empty() {
            bail!("need at least one point");
        }
        if p.draws < 32 {
            bail!("need at least 32 draws");
        }
        Ok(())
    }

    fn run(&self, cfg: &ResolvedConfig, _ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::Clt(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let spec = cfg.ensemble.spec()?;
        let points: Vec<Complex64> = p
            .points
            .iter()
            .map(|q| Complex64::new(q[0], q[1]))
            .collect();
        let report = mc::clt_test(&spec, &points, p.draws, cfg.master_seed)?;
        let variance_ratio = mc::logdet_variance_ratio(&report, 0);
        Ok(Payload::Clt(CltPayload {
            report,
            variance_ratio,
        }))
    }
}
