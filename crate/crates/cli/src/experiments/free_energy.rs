//! Free energy of the exponentiated field across chaos exponents.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::{FreeEnergyEntry, FreeEnergyPayload, Payload};
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::mc;

pub struct FreeEnergy;

impl Experiment for FreeEnergy {
    fn kind(&self) -> &'static str {
        "free-energy"
    }

    fn describe(&self) -> &'static str {
        "free energy ln(N int e^{gamma Phi})/(gamma ln N) vs its limit \
         (params: gammas, region, resolution, draws)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::FreeEnergy(p) = &cfg.params else {
            bail!("config does not carry free-energy parameters");
        };
        if p.gammas.iter().any(|&g| g <= 0.0) {
            bail!("gammas must be positive");
        }
        if p.draws == 0 {
            bail!("draws must be positive");
        }
        Ok(())
    }

    fn run(&self, cfg: &ResolvedConfig, _ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::FreeEnergy(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let spec = cfg.ensemble.spec()?;
        let scan = mc::scan_field(&spec, p.region, p.resolution, p.draws, cfg.master_seed)?;
        let entries = p
            .gammas
            .iter()
            .map(|&gamma| FreeEnergyEntry {
                gamma,
                estimate: mc::free_energy(&scan, gamma),
                prediction: mc::free_energy_prediction(gamma),
            })
            .collect();
        Ok(Payload::FreeEnergy(FreeEnergyPayload {
            n: spec.n,
            entries,
        }))
    }
}
