//! Joint fractional moment estimation vs the closed-form prediction.

use crate::config::{KindParams, ResolvedConfig};
use crate::record::{MomentPayload, Payload};
use crate::registry::{Experiment, RunContext};
use anyhow::{anyhow, bail, Result};
use gmclab_core::mc;
use gmclab_core::predict::{kpoint_predict, KPointQuery};
use num_complex::Complex64;

fn to_points(raw: &[[f64; 2]]) -> Vec<Complex64> {
    raw.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

fn run_moment(
    cfg: &ResolvedConfig,
    points: Vec<Complex64>,
    gammas: &[f64],
    eta: f64,
    samples: u64,
    batch_size: u64,
    ctx: &mut RunContext,
) -> Result<MomentPayload> {
    let spec = cfg.ensemble.spec()?;
    let query = KPointQuery {
        n: spec.n,
        points,
        exponents: gammas.iter().map(|&g| Complex64::new(g, 0.0)).collect(),
        class: spec.class,
        kappa4: spec.kappa4,
    };
    let prediction = kpoint_predict(&query)?;
    let resume_from = ctx.resume.len() as u64;
    let mut resumed = ctx.resume.clone();
    let estimate = if resume_from > 0 && resume_from * batch_size >= samples {
        mc::estimate_from_partials(&query, eta, samples, &resumed)?
    } else {
        let progress = &mut ctx.progress;
        mc::estimate_kpoint_batched(
            &spec,
            &query,
            eta,
            samples,
            cfg.master_seed,
            batch_size,
            resume_from,
            &mut |p| {
                resumed.push(*p);
                if let Some(w) = progress {
                    w.push(p);
                }
            },
        )
        .map(|fresh| {
            if resume_from > 0 {
                resumed.sort_by_key(|p| p.batch);
                mc::estimate_from_partials(&query, eta, samples, &resumed)
            } else {
                Ok(fresh)
            }
        })??
    };
    // the estimator works with the centered field, so drop the leading
    // exp(gamma N (|z|^2 - 1)/2) factor from the prediction
    let log_prediction_centered =
        (prediction.log_value - prediction.parts.point_leading).re;
    let z_score = if estimate.std_error > 0.0 {
        (estimate.log_mean - log_prediction_centered) / estimate.std_error
    } else {
        0.0
    };
    Ok(MomentPayload {
        estimate,
        prediction,
        log_prediction_centered,
        z_score,
    })
}

fn validate_common(gammas: &[f64], samples: u64) -> Result<()> {
    if gammas.iter().any(|&g| g < 0.0) {
        bail!("gammas must be nonnegative for Monte Carlo estimation");
    }
    if samples == 0 {
        bail!("samples must be positive");
    }
    Ok(())
}

pub struct Kpoint;

impl Experiment for Kpoint {
    fn kind(&self) -> &'static str {
        "kpoint"
    }

    fn describe(&self) -> &'static str {
        "joint fractional moment at K points vs the deterministic prediction \
         (params: points, gammas, eta, samples, batch_size)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::Kpoint(p) = &cfg.params else {
            bail!("config does not carry kpoint parameters");
        };
        if p.points.len() != p.gammas.len() || p.points.is_empty() {
            bail!("points and gammas must be nonempty and of equal length");
        }
        validate_common(&p.gammas, p.samples)
    }

    fn run(&self, cfg: &ResolvedConfig, ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::Kpoint(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let payload = run_moment(
            cfg,
            to_points(&p.points),
            &p.gammas,
            p.eta,
            p.samples,
            p.batch_size,
            ctx,
        )?;
        Ok(Payload::Kpoint(payload))
    }
}

pub struct Onepoint;

impl Experiment for Onepoint {
    fn kind(&self) -> &'static str {
        "onepoint"
    }

    fn describe(&self) -> &'static str {
        "single-point fractional moment vs prediction \
         (params: z, gamma, eta, samples, batch_size)"
    }

    fn validate(&self, cfg: &ResolvedConfig) -> Result<()> {
        let KindParams::Onepoint(p) = &cfg.params else {
            bail!("config does not carry onepoint parameters");
        };
        validate_common(&[p.gamma], p.samples)
    }

    fn run(&self, cfg: &ResolvedConfig, ctx: &mut RunContext) -> Result<Payload> {
        let KindParams::Onepoint(p) = &cfg.params else {
            return Err(anyhow!("wrong params"));
        };
        let payload = run_moment(
            cfg,
            vec![Complex64::new(p.z[0], p.z[1])],
            &[p.gamma],
            p.eta,
            p.samples,
            p.batch_size,
            ctx,
        )?;
        Ok(Payload::Onepoint(payload))
    }
}
