//! Local factor of the flow vs its closed-form target.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::Payload;
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::dbm::{local_factor, DbmConfig};

fn build_config(cfg: &ResolvedConfig) -> Result<DbmConfig> {
    let KindParams::DbmLocalFactor(p) = &cfg.params else {
        bail!("config does not carry dbm-local-factor parameters");
    };
    let mut dc = DbmConfig::standard(cfg.ensemble.n, p.omega1);
    if let Some(v) = p.eta_star {
        dc.eta_star = v;
    }
    if let Some(v) = p.eta_m {
        dc.eta_m = v;
    }
    if let Some(v) = p.ell1 {
        dc.ell1 = v;
    }
    if let Some(v) = p.b_frak {
        dc.b_frak = v;
    }
    if let Some(v) = p.steps {
        dc.steps = v;
    }
    if let Some(v) = p.a1 {
        dc.a1 = v;
    }
    dc.validate()?;
    Ok(dc)
}

pub struct DbmLocalFactor;

impl Experiment for DbmLocalFactor {
    fn kind(&self) -> &'static str {
        "dbm-local-factor"
    }

    fn describe(&self) -> &'static str {
        "Monte Carlo local factor of the singular-value flow vs its \
         closed-form target (params: omega1, lambda, paths + scale overrides)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let dc = build_config(cfg)?;
        let KindParams::DbmLocalFactor(p) = &cfg.params else {
            unreachable!();
        };
        if !(0.0..=3.0).contains(&p.lambda) {
            bail!("lambda must lie in [0, 3]");
        }
        if p.paths < 100 {
            bail!("need at least 100 paths");
        }
        let _ = dc;
        Ok(())
    }

    fn run(&self, cfg: &ResolvedConfig, _ctx: &mut RunContext) -> Result<Payload> {
        let dc = build_config(cfg)?;
        let KindParams::DbmLocalFactor(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let est = local_factor(&dc, p.lambda, p.paths, cfg.master_seed)?;
        Ok(Payload::DbmLocalFactor(est))
    }
}
