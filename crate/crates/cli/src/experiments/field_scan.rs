//! Centered log-determinant field over a grid, persisted as CSV.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::{FieldScanPayload, Payload};
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::mc;
use gmclab_core::stats::mean;
use std::io::Write;

pub struct FieldScan;

impl Experiment for FieldScan {
    fn kind(&self) -> &'static str {
        "field-scan"
    }

    fn describe(&self) -> &'static str {
        "centered log-determinant field on a grid, one decomposition per \
         (draw, cell) (params: region, resolution, draws)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::FieldScan(p) = &cfg.params else {
            bail!("config does not carry field-scan parameters");
        };
        if p.draws == 0 {
            bail!("draws must be positive");
        }
        if p.resolution == 0 {
            bail!("resolution must be positive");
        }
        Ok(())
    }

    fn run(&self, cfg: &ResolvedConfig, _ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::FieldScan(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let spec = cfg.ensemble.spec()?;
        let scan = mc::scan_field(&spec, p.region, p.resolution, p.draws, cfg.master_seed)?;
        let cells = scan.grid.len();
        let mean_phi: Vec<f64> = (0..cells)
            .map(|j| {
                let m = mean(&scan.values.iter().map(|row| row[j]).collect::<Vec<_>>());
                if m.is_finite() {
                    m
                } else {
                    f64::MIN
                }
            })
            .collect();
        let per_draw_max: Vec<f64> = scan
            .values
            .iter()
            .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let csv = cfg.output.with_extension("field.csv");
        let mut f = std::fs::File::create(&csv)?;
        writeln!(f, "x,y,weight,mean_phi")?;
        for (j, z) in scan.grid.iter().enumerate() {
            writeln!(f, "{},{},{},{}", z.re, z.im, scan.weights[j], mean_phi[j])?;
        }
        Ok(Payload::FieldScan(FieldScanPayload {
            n: scan.n,
            cells,
            draws: scan.draws,
            grid: scan.grid.iter().map(|z| [z.re, z.im]).collect(),
            mean_phi,
            per_draw_max,
            csv,
        }))
    }
}
