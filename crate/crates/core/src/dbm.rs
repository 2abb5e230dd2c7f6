//! Singular-value Dyson Brownian motion at the origin, the local variables
//! of the local-global decomposition, and a Monte Carlo estimate of the
//! universal local factor.
//!
//! The module simulates only the `z = 0`, unit-scale flow; spectral
//! rescaling is the caller's job (the law of the local variables does not
//! depend on `z` once rescaled). The symmetrized spectrum is folded onto
//! positive indices: the `i = -i` interaction contributes `1/(2 mu_i)` and
//! mirrored noise is implicit.
//!
//! Terminal-time data (the first local variable) comes from an exact
//! matrix representation -- singular values of `G + sqrt(t1) G'` -- which
//! has no integration error. Path functionals (the stochastic integral and
//! the quadratic functional) come from Euler-Maruyama with preemptive step
//! halving, since they need the driving noise, which the matrix picture
//! does not expose.

use crate::ensembles::{sample_matrix, EnsembleSpec, EntryLaw, MatrixDraw, SymmetryClass};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{rng_from_stream, stream_id, StreamDomain};
use crate::stats::{csum, mean, variance};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

/// Density of the unit-scale symmetrized spectrum at the origin.
const RHO0: f64 = 1.0 / PI;

/// Parameters of the reference flow and the local variables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DbmConfig {
    pub n: usize,
    /// Exponent in `t1 = N^{omega1 - 1}`.
    pub omega1: f64,
    /// Final time.
    pub t1: f64,
    /// Mesoscopic scale, in `(1/N, t1)`.
    pub eta_star: f64,
    /// Sub-microscopic scale, below `1/N`.
    pub eta_m: f64,
    /// Index cutoff of the stochastic integral.
    pub ell1: usize,
    /// Exponent of the terminal index window `N^{b_frak}`.
    pub b_frak: f64,
    /// Stored integration steps.
    pub steps: usize,
    /// Window constant for the stochastic-integral indicator.
    pub a1: f64,
}

impl DbmConfig {
    /// Reasonable defaults for a given `(n, omega1)`.
    pub fn standard(n: usize, omega1: f64) -> Self {
        let nf = n as f64;
        let t1 = nf.powf(omega1 - 1.0);
        let eta_star = nf.powf(omega1 / 2.0) / nf;
        let eta_m = nf.powf(-1.5);
        let ell1 = (nf.powf(0.55).round() as usize).clamp(4, n / 8);
        let b_frak = (0.8 * ell1 as f64).ln() / nf.ln();
        DbmConfig {
            n,
            omega1,
            t1,
            eta_star,
            eta_m,
            ell1,
            b_frak,
            steps: 512,
            a1: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nf = self.n as f64;
        if !(self.eta_m < 1.0 / nf && 1.0 / nf < self.eta_star && self.eta_star < self.t1
            && self.t1 < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "scale ordering violated: need eta_m < 1/N < eta_star < t1 < 1 \
                 (eta_m={}, 1/N={}, eta_star={}, t1={})",
                self.eta_m,
                1.0 / nf,
                self.eta_star,
                self.t1
            )));
        }
        if self.ell1 < 2 || self.ell1 >= self.n {
            return Err(Error::InvalidConfig("need 2 <= ell1 < n".into()));
        }
        if self.index_window() + 1 > 4 * self.ell1 {
            return Err(Error::InvalidConfig(
                "terminal window N^b must sit inside the active set 4*ell1".into(),
            ));
        }
        if self.steps < 16 {
            return Err(Error::InvalidConfig("need steps >= 16".into()));
        }
        if !(self.a1 > 0.0) {
            return Err(Error::InvalidConfig("a1 must be positive".into()));
        }
        Ok(())
    }

    /// Largest index participating in the terminal window `|i| < N^{b_frak}`.
    pub fn index_window(&self) -> usize {
        let wb = (self.n as f64).powf(self.b_frak);
        (wb.ceil() as usize).saturating_sub(1).max(1)
    }

    fn active(&self) -> usize {
        (4 * self.ell1).min(self.n)
    }
}

/// One integrated flow: ordered positive singular values at each stored
/// time and the retained Brownian increments for small indices.
#[derive(Debug, Clone)]
pub struct DbmPath {
    pub config: DbmConfig,
    pub times: Vec<f64>,
    /// `mu[k][i-1]` is the `i`-th positive value at `times[k]`.
    pub mu: Vec<Vec<f64>>,
    /// `noise[k][i-1]` is the increment of `W_i` over `[times[k], times[k+1]]`,
    /// retained for `i <= ell1`.
    pub noise: Option<Vec<Vec<f64>>>,
}

impl DbmPath {
    /// Dump the path as a flat little-endian binary file:
    /// header `u64 x 3 = [steps+1, n, ell1]`, then `times` (steps+1 f64),
    /// then `mu` row-major ((steps+1) * n f64), then the retained noise
    /// row-major (steps * ell1 f64, omitted when not retained).
    pub fn dump(&self, path: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let rows = self.times.len() as u64;
        let n = self.config.n as u64;
        let ell1 = if self.noise.is_some() {
            self.config.ell1 as u64
        } else {
            0
        };
        for v in [rows, n, ell1] {
            f.write_all(&v.to_le_bytes())?;
        }
        for t in &self.times {
            f.write_all(&t.to_le_bytes())?;
        }
        for row in &self.mu {
            for v in row {
                f.write_all(&v.to_le_bytes())?;
            }
        }
        if let Some(noise) = &self.noise {
            for row in noise {
                for v in row {
                    f.write_all(&v.to_le_bytes())?;
                }
            }
        }
        f.flush()
    }
}

/// The three local variables of one path plus their indicator windows.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalVariables {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l1_ok: bool,
    pub l2_ok: bool,
    pub l3_ok: bool,
}

impl LocalVariables {
    pub fn in_window(&self) -> bool {
        self.l1_ok && self.l2_ok && self.l3_ok
    }
}

/// Monte Carlo estimate of the local factor with its closed-form target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalFactorEstimate {
    pub lambda: f64,
    pub paths: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// `exp(lambda^2/8 * ln(2 N t1)) / G-constant(lambda)`.
    pub prediction: f64,
    pub window_violations: usize,
    pub ess: f64,
    pub mean_l1: f64,
    pub mean_l2: f64,
    pub mean_l3: f64,
}

/// Add an independent Gaussian flow increment of time length `t`:
/// `X_t = X_0 + sqrt(t) * Ginibre` of the matching symmetry class
/// (the one-shot law of the matrix Brownian motion).
pub fn evolve_matrix(x0: &MatrixDraw, t: f64, stream: u64) -> MatrixDraw {
    if t == 0.0 {
        return x0.clone();
    }
    let mut rng = rng_from_stream(stream);
    let n = x0.n;
    let mut entries = x0.entries.clone();
    match x0.class {
        SymmetryClass::Real => {
            let s = (t / n as f64).sqrt();
            for v in entries.data.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(g * s, 0.0);
            }
        }
        SymmetryClass::Complex => {
            let s = (t / (2.0 * n as f64)).sqrt();
            for v in entries.data.iter_mut() {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(a * s, b * s);
            }
        }
    }
    MatrixDraw {
        class: x0.class,
        n,
        seed: stream,
        entries,
    }
}

/// Frozen particles closest to the active window whose repulsion is
/// recomputed every substep; the rest is a slowly varying cached field.
const WALL: usize = 8;

struct Integrator<'a> {
    config: &'a DbmConfig,
    /// 1-based active values, ascending.
    active: Vec<f64>,
    /// initial far tail; transported by `scale = sqrt(1 + s)` so the
    /// external field expands with the gas instead of damming it
    frozen0: Vec<f64>,
    scale: f64,
    far_field: Vec<f64>,
    substeps_since_refresh: usize,
}

impl<'a> Integrator<'a> {
    fn far_field_refresh(&mut self) {
        let scale = self.scale;
        let far = &self.frozen0[WALL.min(self.frozen0.len())..];
        for (slot, &mu) in self.far_field.iter_mut().zip(&self.active) {
            *slot = csum(far.iter().map(|&g0| {
                let g = g0 * scale;
                2.0 * mu / ((mu - g) * (mu + g))
            }));
        }
        self.substeps_since_refresh = 0;
    }

    fn drift(&self, i: usize) -> f64 {
        let mu = &self.active;
        let mi = mu[i];
        let mut acc = 1.0 / (2.0 * mi) + self.far_field[i];
        for (j, &mj) in mu.iter().enumerate() {
            if j != i {
                // 1/(mi - mj) + 1/(mi + mj)
                acc += 2.0 * mi / ((mi - mj) * (mi + mj));
            }
        }
        for &g0 in self.frozen0.iter().take(WALL) {
            let g = g0 * self.scale;
            acc += 2.0 * mi / ((mi - g) * (mi + g));
        }
        acc / (2.0 * self.config.n as f64)
    }

    fn wall(&self) -> Option<f64> {
        self.frozen0.first().map(|&g0| g0 * self.scale)
    }

    fn min_spacing(&self) -> f64 {
        let mut d = 2.0 * self.active[0]; // distance to the mirrored -mu_1
        for w in self.active.windows(2) {
            d = d.min(w[1] - w[0]);
        }
        if let Some(wall) = self.wall() {
            d = d.min(wall - *self.active.last().unwrap());
        }
        d
    }

    fn frozen_row(&self) -> Vec<f64> {
        self.frozen0.iter().map(|&g0| g0 * self.scale).collect()
    }
}

/// Integrate the folded symmetrized flow from a Ginibre initial condition.
/// Far indices (`i > 4 ell1`) are frozen at the draw's own values, which
/// rigidity keeps within `(log N)/N` of their quantiles; freezing at the
/// deterministic quantiles themselves would break ordering at the boundary
/// for about half of all draws. The cached far-field pull is refreshed
/// every 16 substeps, the nearest frozen particles repel exactly.
pub fn reference_flow(config: &DbmConfig, master_seed: u64, path_index: u64) -> Result<DbmPath> {
    reference_flow_scaled(config, master_seed, path_index, 1.0)
}

fn reference_flow_scaled(
    config: &DbmConfig,
    master_seed: u64,
    path_index: u64,
    noise_scale: f64,
) -> Result<DbmPath> {
    config.validate()?;
    let n = config.n;
    let n_act = config.active();
    // initial data: singular values of a complex Ginibre draw
    let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n)?;
    let g0 = sample_matrix(
        &spec,
        stream_id(master_seed, StreamDomain::DbmInitial, path_index),
    );
    let sv = linalg::singular_values(g0.entries)?;
    let active: Vec<f64> = sv[..n_act].to_vec();
    let frozen0: Vec<f64> = sv[n_act..].to_vec();
    let mut state = Integrator {
        config,
        far_field: vec![0.0; n_act],
        active,
        frozen0,
        scale: 1.0,
        substeps_since_refresh: 0,
    };
    state.far_field_refresh();

    let mut noise_rng = rng_from_stream(stream_id(
        master_seed,
        StreamDomain::DbmNoise,
        path_index,
    ));
    let dt = config.t1 / config.steps as f64;
    let two_n = 2.0 * n as f64;
    let mut times = Vec::with_capacity(config.steps + 1);
    let mut mu = Vec::with_capacity(config.steps + 1);
    let mut noise = Vec::with_capacity(config.steps);
    let store_row = |state: &Integrator| -> Vec<f64> {
        let mut row = state.active.clone();
        row.extend_from_slice(&state.frozen_row());
        row
    };
    times.push(0.0);
    mu.push(store_row(&state));

    let mut drift_buf = vec![0.0f64; n_act];
    // smallest resolved gap: 2% of the mean local spacing; beta = 2 level
    // repulsion puts ~1e-5 probability mass below it, and the retained
    // functionals only probe scales >= eta_star, three orders above
    let gap_floor = 0.02 * PI / (2.0 * n as f64);
    for k in 0..config.steps {
        let mut retained = vec![0.0f64; config.ell1];
        let mut remaining = dt;
        while remaining > 1e-18 * dt {
            // preemptive halving: noise sd per substep must stay below a
            // quarter of the current minimum spacing
            let spacing = state.min_spacing().max(gap_floor);
            let cap = spacing * spacing * two_n / 16.0;
            let mut sub = remaining.min(dt);
            let mut depth = 0;
            while sub > cap && depth < 20 {
                sub *= 0.5;
                depth += 1;
            }
            if sub > cap {
                return Err(Error::StepCollision(k as f64 * dt + (dt - remaining)));
            }
            sub = sub.min(remaining);
            if state.substeps_since_refresh >= 16 {
                state.far_field_refresh();
            }
            for (i, d) in drift_buf.iter_mut().enumerate() {
                *d = state.drift(i);
            }
            let sqrt_sub = sub.sqrt();
            for i in 0..n_act {
                let dw: f64 = noise_rng.sample::<f64, _>(StandardNormal) * sqrt_sub * noise_scale;
                if i < config.ell1 {
                    retained[i] += dw;
                }
                state.active[i] += dw / two_n.sqrt() + drift_buf[i] * sub;
            }
            state.substeps_since_refresh += 1;
            state.scale = (1.0 + (k as f64 * dt + (dt - remaining) + sub)).sqrt();
            // chiral reflection at the origin, soft wall at the frozen tail;
            // a residual adjacent crossing is a label exchange, resolved by
            // sorting (the two particles are within one noise sd here)
            if state.active[0] < 0.0 {
                state.active[0] = -state.active[0];
            }
            if let Some(wall) = state.wall() {
                let last = state.active.last_mut().unwrap();
                if *last > wall {
                    *last = wall - (*last - wall).min(wall * 0.5);
                }
            }
            if state.active.windows(2).any(|w| w[1] < w[0]) {
                state.active.sort_by(f64::total_cmp);
            }
            if !state.active[0].is_finite() {
                return Err(Error::StepCollision(k as f64 * dt + (dt - remaining)));
            }
            // project onto the cone of gap_floor-separated configurations
            state.active[0] = state.active[0].max(gap_floor / 2.0);
            for i in 1..n_act {
                if state.active[i] < state.active[i - 1] + gap_floor {
                    state.active[i] = state.active[i - 1] + gap_floor;
                }
            }
            remaining -= sub;
        }
        times.push((k + 1) as f64 * dt);
        mu.push(store_row(&state));
        noise.push(retained);
    }
    Ok(DbmPath {
        config: *config,
        times,
        mu,
        noise: Some(noise),
    })
}

/// Closed-form double integral of `u/(x^2+u^2)` over
/// `|x| < xb, u in [ua, ub]`, times `N rho0`:
/// primitive of `arctan(xb/u)` is `u arctan(xb/u) + (xb/2) ln(xb^2 + u^2)`.
fn l1_deterministic(n: usize, xb: f64, ua: f64, ub: f64) -> f64 {
    let p = |u: f64| u * (xb / u).atan() + xb / 2.0 * (xb * xb + u * u).ln();
    2.0 * n as f64 * RHO0 * (p(ub) - p(ua))
}

/// The three local variables of one stored path.
pub fn local_variables(path: &DbmPath, config: &DbmConfig) -> Result<LocalVariables> {
    config.validate()?;
    let terminal = path.mu.last().ok_or(Error::MissingNoise)?;
    let l1 = l1_from_terminal(config, terminal);
    let noise = path.noise.as_ref().ok_or(Error::MissingNoise)?;

    // stochastic integral over retained increments, Ito (left) endpoints
    let mut l2 = 0.0f64;
    let lim = config.ell1.saturating_sub(1);
    for (k, dws) in noise.iter().enumerate() {
        let s = path.times[k];
        let nu = config.eta_star + config.t1 - s;
        let row = &path.mu[k];
        for i in 0..lim {
            let m = row[i];
            l2 += 2.0 * m / (m * m + nu * nu) * dws[i];
        }
    }
    l2 *= 0.5 / (2.0 * config.n as f64).sqrt();

    // quadratic functional on [t1/2, t1]; the centered sum is purely
    // imaginary on the imaginary axis, so the integrand is -(Im S)^2
    let gamma_ell = config.ell1 as f64 * PI / (2.0 * config.n as f64);
    let im_s = |k: usize| -> f64 {
        let s = path.times[k];
        let nu = config.eta_star + config.t1 - s;
        let row = &path.mu[k];
        let sum: f64 = (0..lim).map(|i| 1.0 / (row[i] * row[i] + nu * nu)).sum();
        nu / config.n as f64 * sum - 2.0 * RHO0 * (gamma_ell / nu).atan()
    };
    let mut l3 = 0.0f64;
    let half = config.t1 / 2.0;
    for k in 0..path.times.len() - 1 {
        let (ta, tb) = (path.times[k], path.times[k + 1]);
        if tb <= half {
            continue;
        }
        let a = ta.max(half);
        let va = im_s(k);
        let vb = im_s(k + 1);
        l3 += 0.5 * (va * va + vb * vb) * (tb - a);
    }
    l3 *= -(config.n as f64) / 2.0;

    Ok(windows(config, l1, l2, l3))
}

fn l1_from_terminal(config: &DbmConfig, terminal: &[f64]) -> f64 {
    let i_max = config.index_window();
    let xb = (config.n as f64).powf(config.b_frak) * PI / (2.0 * config.n as f64);
    let det = l1_deterministic(config.n, xb, config.eta_m, config.eta_star);
    let e2s = config.eta_star * config.eta_star;
    let e2m = config.eta_m * config.eta_m;
    let sum = csum(
        terminal[..i_max]
            .iter()
            .map(|&m| ((m * m + e2s) / (m * m + e2m)).ln()),
    );
    det - 0.5 * sum
}

fn windows(config: &DbmConfig, l1: f64, l2: f64, l3: f64) -> LocalVariables {
    let ln_n = (config.n as f64).ln();
    LocalVariables {
        l1,
        l2,
        l3,
        l1_ok: l1 <= ln_n.powf(0.75),
        l2_ok: l2.abs() <= config.a1 * ln_n,
        l3_ok: l3.abs() <= 1.0,
    }
}

/// Closed-form target of the local factor.
pub fn local_factor_prediction(config: &DbmConfig, lambda: f64) -> Result<f64> {
    let arg = 2.0 * config.n as f64 * config.t1;
    let g = crate::special::g_constant(Complex64::new(lambda, 0.0))?;
    Ok((lambda * lambda / 8.0 * arg.ln()).exp() / g.re)
}

/// Monte Carlo estimate of
/// `E[ e^{lambda (L1 + L2 + L3)} 1_{windows} ]` over independent paths.
///
/// The terminal variable comes from an exact matrix draw, the path
/// functionals from the integrated flow; their product estimates the
/// factorized local factor.
pub fn local_factor(
    config: &DbmConfig,
    lambda: f64,
    paths: usize,
    master_seed: u64,
) -> Result<LocalFactorEstimate> {
    config.validate()?;
    if !(0.0..=3.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "lambda must lie in [0, 3] (got {lambda})"
        )));
    }
    if paths < 100 {
        return Err(Error::TooFewDraws {
            got: paths,
            min: 100,
        });
    }
    let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, config.n)?;
    let results: Vec<(f64, f64, f64, f64, bool)> = (0..paths)
        .into_par_iter()
        .map(|p| {
            // exact terminal representation: sv of G + sqrt(t1) G'
            let base = sample_matrix(
                &spec,
                stream_id(master_seed, StreamDomain::DbmTerminalBase, p as u64),
            );
            let evolved = evolve_matrix(
                &base,
                config.t1,
                stream_id(master_seed, StreamDomain::DbmTerminalIncrement, p as u64),
            );
            let sv = linalg::singular_values(evolved.entries)?;
            let l1 = l1_from_terminal(config, &sv);
            // path functionals from the integrated flow
            let path = reference_flow(config, master_seed, p as u64)?;
            let lv = local_variables(&path, config)?;
            let merged = windows(config, l1, lv.l2, lv.l3);
            let weight = if merged.in_window() {
                (lambda * (merged.l1 + merged.l2 + merged.l3)).exp()
            } else {
                0.0
            };
            Ok((weight, merged.l1, merged.l2, merged.l3, merged.in_window()))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = results.iter().map(|r| r.0).collect();
    let est = mean(&weights);
    let se = (variance(&weights) / paths as f64).sqrt();
    let sum_w = csum(weights.iter().copied());
    let sum_w2 = csum(weights.iter().map(|&w| w * w));
    let ess = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    Ok(LocalFactorEstimate {
        lambda,
        paths,
        estimate: est,
        std_error: se,
        prediction: local_factor_prediction(config, lambda)?,
        window_violations: results.iter().filter(|r| !r.4).count(),
        ess,
        mean_l1: mean(&results.iter().map(|r| r.1).collect::<Vec<_>>()),
        mean_l2: mean(&results.iter().map(|r| r.2).collect::<Vec<_>>()),
        mean_l3: mean(&results.iter().map(|r| r.3).collect::<Vec<_>>()),
    })
}
