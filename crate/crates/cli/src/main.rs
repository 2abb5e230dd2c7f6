//! `gmclab` -- experiment runner for the i.i.d. matrix spectral-statistics
//! laboratory. Experiments are described by a TOML config, dispatched
//! through a registry by kind, and produce self-contained JSON records.

mod compare;
mod config;
mod experiments;
mod plot;
mod record;
mod registry;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use config::Overrides;
use record::{load_progress, ProgressWriter, ResultRecord};
use registry::{ExperimentRegistry, RunContext};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "gmclab", version, about = "spectral statistics laboratory for i.i.d. matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the worker count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the output path stem.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Reuse batch partials from an interrupted run of the same config.
        #[arg(long)]
        resume: bool,
    },
    /// Tabulate moment records against their predictions.
    Compare {
        /// Result record files (kpoint / onepoint).
        records: Vec<PathBuf>,
    },
    /// Emit plot files for a result record.
    Plot { record: PathBuf },
    /// Parse and validate a config file, printing the resolved form.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the registered experiment kinds.
    ListKinds,
}

fn main() {
    if let Err(e) = dispatch() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            workers,
            output,
            resume,
        } => run(
            &config,
            Overrides {
                seed,
                workers,
                output,
            },
            resume,
        ),
        Command::Compare { records } => {
            if records.is_empty() {
                bail!("no records given");
            }
            let recs = records
                .iter()
                .map(|p| ResultRecord::load(p))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", compare::compare(&recs)?);
            Ok(())
        }
        Command::Plot { record } => {
            let rec = ResultRecord::load(&record)?;
            for path in plot::plot(&rec, &record)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::ValidateConfig { config } => {
            let resolved = config::load(&config, &Overrides::default())?;
            let registry = ExperimentRegistry::builtin();
            registry.get(resolved.params.kind())?.validate(&resolved)?;
            println!("valid: kind = {}", resolved.params.kind());
            println!("digest: {}", resolved.digest());
            println!("{}", serde_json::to_string_pretty(&resolved)?);
            Ok(())
        }
        Command::ListKinds => {
            let registry = ExperimentRegistry::builtin();
            for exp in registry.iter() {
                println!("{:<18} {}", exp.kind(), exp.describe());
            }
            Ok(())
        }
    }
}

fn run(config_path: &PathBuf, over: Overrides, resume: bool) -> Result<()> {
    let cfg = config::load(config_path, &over)?;
    let registry = ExperimentRegistry::builtin();
    let experiment = registry.get(cfg.params.kind())?;
    experiment.validate(&cfg)?;
    let digest = cfg.digest();

    let record_path = cfg.output.with_extension("json");
    let progress_path = cfg.output.with_extension("progress.jsonl");
    let mut ctx = RunContext::fresh();
    if progress_path.exists() {
        if resume {
            ctx.resume = load_progress(&progress_path, &digest)?;
            eprintln!(
                "resuming: {} batch partial(s) recovered from {}",
                ctx.resume.len(),
                progress_path.display()
            );
        } else {
            // a partial output from a different config is an error either way
            load_progress(&progress_path, &digest).with_context(|| {
                format!(
                    "existing progress file {} (pass --resume to continue, or remove it)",
                    progress_path.display()
                )
            })?;
        }
    }
    ctx.progress = Some(ProgressWriter::append(&progress_path, &digest)?);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("building worker pool")?;
    let started = chrono::Utc::now();
    let payload = pool.install(|| experiment.run(&cfg, &mut ctx))?;
    let finished = chrono::Utc::now();

    let mut flags = cfg.overrides.clone();
    collect_payload_flags(&payload, &mut flags);
    let record = ResultRecord {
        config_digest: digest,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished,
        config: cfg.clone(),
        payload,
        flags,
    };
    record.write(&record_path)?;
    println!("wrote {}", record_path.display());
    summarize(&record);
    Ok(())
}

fn collect_payload_flags(payload: &record::Payload, flags: &mut Vec<String>) {
    match payload {
        record::Payload::Kpoint(p) | record::Payload::Onepoint(p) => {
            if p.estimate.flags.low_ess {
                flags.push("low-ess".into());
            }
            if p.estimate.flags.heavy_tail {
                flags.push("heavy-tail".into());
            }
            if !p.prediction.flags.reflected.is_empty() {
                flags.push(format!(
                    "reflected-points={:?}",
                    p.prediction.flags.reflected
                ));
            }
        }
        record::Payload::DbmLocalFactor(est) => {
            if est.window_violations > 0 {
                flags.push(format!("window-violations={}", est.window_violations));
            }
        }
        record::Payload::GmcSample(p) => {
            if p.clip_mass_rel > 0.0 {
                flags.push(format!("covariance-clip-rel={:.3e}", p.clip_mass_rel));
            }
        }
        _ => {}
    }
}

fn summarize(record: &ResultRecord) {
    match &record.payload {
        record::Payload::Kpoint(p) | record::Payload::Onepoint(p) => {
            println!(
                "ln MC = {:.6} +- {:.4}, ln prediction = {:.6}, z = {:+.2}, ess = {:.1}",
                p.estimate.log_mean,
                p.estimate.std_error,
                p.log_prediction_centered,
                p.z_score,
                p.estimate.ess
            );
        }
        record::Payload::Clt(p) => {
            println!(
                "variance ratio = {:.4}; sample vs predicted covariance at {} point(s)",
                p.variance_ratio,
                p.report.points.len()
            );
        }
        record::Payload::ThickPoints(p) => {
            println!(
                "fitted slope = {:.4} (expected {:.4})",
                p.slope, p.expected_slope
            );
        }
        record::Payload::FreeEnergy(p) => {
            for e in &p.entries {
                println!(
                    "gamma = {:.3}: estimate {:.4}, prediction {:.4}",
                    e.gamma, e.estimate, e.prediction
                );
            }
        }
        record::Payload::DbmLocalFactor(est) => {
            println!(
                "local factor = {:.4} +- {:.4}, prediction = {:.4}, ratio = {:.4}",
                est.estimate,
                est.std_error,
                est.prediction,
                est.estimate / est.prediction
            );
        }
        record::Payload::GmcSample(p) => {
            println!(
                "mean total mass = {:.4} +- {:.4} vs area {:.4} (z = {:+.2}){}",
                p.mean_total_mass,
                p.se_total_mass,
                p.region_area,
                p.mass_z_score,
                p.ks_vs_alt
                    .map_or(String::new(), |d| format!(", KS vs alt eps = {d:.4}"))
            );
        }
        record::Payload::FieldScan(p) => {
            println!("{} cells x {} draws -> {}", p.cells, p.draws, p.csv.display());
        }
        record::Payload::MdeReport(p) => {
            println!(
                "edge = {:.6}, rho(0) = {:.6} -> {}",
                p.edge,
                p.rho0,
                p.csv.display()
            );
        }
    }
}
