//! Scalar self-consistent (Dyson) equation for the Hermitized resolvent,
//! the deterministic spectral density, quantiles, centering integrals, and
//! the characteristic ODE of the matrix flow.
//!
//! On the imaginary axis `w = i eta` the solution is purely imaginary and
//! the equation reduces to one real cubic in `s = eta + Im m`:
//!
//! ```text
//! s = (s - eta) (s^2 + |z|^2)
//! ```
//!
//! which is solved by safeguarded Newton on the bracket `[eta, eta + 2]`.
//! This is the hot path for centerings and covariance functionals. Off-axis
//! solves use damped fixed-point iteration with continuation from a
//! large-eta seed, then a Newton polish; the stable branch is selected by
//! `Im m * Im w > 0`.

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gauss7};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One solution of the self-consistent equation at `(z, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdeSolution {
    pub z: Complex64,
    pub w: Complex64,
    pub m: Complex64,
    pub u: Complex64,
}

/// Density data of the Hermitized spectrum for one `z`: edge, a sampled
/// profile on `[0, edge]`, and (optionally) the quantiles `gamma_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityProfile {
    pub z: Complex64,
    pub edge: f64,
    pub grid: Vec<(f64, f64)>,
    pub quantiles: Vec<f64>,
}

/// The deterministic centering integral `int log(x^2 + eta^2) rho^z(x) dx`
/// (over the full symmetrized support).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdeCenterings {
    pub z: Complex64,
    pub eta: f64,
    pub integral: f64,
}

/// Characteristic trajectory `(t, eta_t)` of the flow, ascending in `t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Characteristic {
    pub z0: Complex64,
    pub path: Vec<(f64, f64)>,
}

/// Root of `s^3 - eta s^2 + (|z|^2 - 1) s - eta |z|^2 = 0` with `s > eta`,
/// i.e. the imaginary-axis solution in the variable `s = eta + Im m`.
fn s_root(zabs2: f64, eta: f64) -> f64 {
    debug_assert!(eta >= 0.0);
    if eta == 0.0 {
        return (1.0 - zabs2).max(0.0).sqrt();
    }
    let f = |s: f64| (s - eta) * (s * s + zabs2) - s;
    let df = |s: f64| 3.0 * s * s - 2.0 * eta * s + zabs2 - 1.0;
    // f(eta) = -eta < 0, f(eta + 2) > 0
    let mut lo = eta;
    let mut hi = eta + 2.0;
    let mut s = (1.0 - zabs2).max(eta * eta).sqrt().max(eta * 1.0001);
    if s <= lo || s >= hi {
        s = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let fs = f(s);
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = df(s);
        let mut next = if d != 0.0 { s - fs / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-17 * s.abs() {
            s = next;
            break;
        }
        s = next;
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    s
}

/// Imaginary-axis solution as the pair `(v, u)` with `m = i v` and `u` real.
pub fn imag_axis_mu(z: Complex64, eta: f64) -> Result<(f64, f64)> {
    if eta < 0.0 {
        return Err(Error::NonpositiveEta(eta));
    }
    let z2 = z.norm_sqr();
    if eta == 0.0 {
        // limits of v = s and u = (s - eta)/s as eta -> 0
        return if z2 < 1.0 {
            Ok(((1.0 - z2).sqrt(), 1.0))
        } else if z2 == 1.0 {
            Ok((0.0, 1.0))
        } else {
            Ok((0.0, 1.0 / z2))
        };
    }
    let s = s_root(z2, eta);
    Ok((s - eta, (s - eta) / s))
}

fn residual(z2: f64, w: Complex64, m: Complex64) -> f64 {
    let q = w + m;
    (-1.0 / m - (q - z2 / q)).norm()
}

fn polish_newton(z2: f64, w: Complex64, mut m: Complex64) -> Complex64 {
    // roots of P(m) = m (w + m)^2 - m z2 + (w + m)
    for _ in 0..60 {
        let q = w + m;
        let p = m * q * q - m * z2 + q;
        let dp = q * q + 2.0 * m * q - z2 + 1.0;
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        m -= step;
        if step.norm() <= 1e-16 * m.norm() {
            break;
        }
    }
    m
}

/// Solve the self-consistent equation at spectral parameter `z` and
/// resolvent argument `w` (upper half plane, or the limit on the
/// nonnegative imaginary axis).
pub fn solve_mde(z: Complex64, w: Complex64) -> Result<MdeSolution> {
    let z2 = z.norm_sqr();
    if w.re == 0.0 && w.im >= 0.0 {
        let (v, u) = imag_axis_mu(z, w.im)?;
        let m = Complex64::new(0.0, v);
        return Ok(MdeSolution {
            z,
            w,
            m,
            u: Complex64::new(u, 0.0),
        });
    }
    if w.im <= 0.0 {
        return Err(Error::Domain(format!(
            "solve_mde requires Im w > 0 or w on the nonnegative imaginary axis (got {w})"
        )));
    }
    // continuation in the imaginary part from a large-eta seed
    let mut eta = w.im.max(2.0);
    let mut m = -1.0 / Complex64::new(w.re, eta);
    loop {
        let wc = Complex64::new(w.re, eta);
        for _ in 0..800 {
            let q = wc + m;
            let fm = -1.0 / (q - z2 / q);
            let next = 0.5 * m + 0.5 * fm;
            let next = if next.im <= 0.0 {
                Complex64::new(next.re, 0.25 * m.im.abs().max(1e-14))
            } else {
                next
            };
            let delta = (next - m).norm();
            m = next;
            if delta <= 1e-13 * m.norm().max(1e-8) {
                break;
            }
        }
        m = polish_newton(z2, wc, m);
        if eta <= w.im {
            break;
        }
        eta = (eta * 0.7).max(w.im);
    }
    let r = residual(z2, w, m);
    if !(r < 1e-12) || !(m.im * w.im > 0.0) {
        return Err(Error::NoConvergence { z, w, residual: r });
    }
    Ok(MdeSolution {
        z,
        w,
        m,
        u: m / (w + m),
    })
}

/// Density `rho^z(x)` from the real cubic in `Q = x + m`:
/// `Q^3 - x Q^2 + (1 - |z|^2) Q + x |z|^2 = 0`, complex-pair branch.
pub fn rho_at(z: Complex64, x: f64) -> f64 {
    let z2 = z.norm_sqr();
    let x = x.abs();
    // depressed cubic y^3 + p y + q, Q = y + x/3
    let a = -x;
    let b = 1.0 - z2;
    let c = x * z2;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc <= 0.0 {
        // three real roots: outside the support
        return 0.0;
    }
    let d = disc.sqrt();
    // stable real root: take the larger-magnitude cube-root branch
    let big = if q >= 0.0 { -q / 2.0 - d } else { -q / 2.0 + d };
    let aa = big.cbrt();
    let bb = if aa == 0.0 { 0.0 } else { -p / (3.0 * aa) };
    let y1 = aa + bb;
    let pair = 3.0 * y1 * y1 + 4.0 * p;
    if pair <= 0.0 {
        return 0.0;
    }
    pair.sqrt() / (2.0 * std::f64::consts::PI)
}

/// Locate the support edge by bisection on `rho > 1e-10`.
fn locate_edge(z: Complex64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 4.0f64;
    debug_assert!(rho_at(z, lo) > 1e-10);
    debug_assert!(rho_at(z, hi) <= 1e-10);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rho_at(z, mid) > 1e-10 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Cumulative table for `int_0^x rho`, with a sqrt-aware tail panelization.
pub(crate) struct Cdf {
    z: Complex64,
    pub edge: f64,
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl Cdf {
    pub(crate) fn new(z: Complex64) -> Self {
        let edge = locate_edge(z);
        let delta = (edge / 8.0).min(0.05);
        let split = edge - delta;
        let n_main = 1024usize;
        let n_tail = 256usize;
        let rho = |x: f64| rho_at(z, x);
        let mut xs = Vec::with_capacity(n_main + n_tail + 1);
        let mut cum = Vec::with_capacity(n_main + n_tail + 1);
        xs.push(0.0);
        cum.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=n_main {
            let a = split * (k - 1) as f64 / n_main as f64;
            let b = split * k as f64 / n_main as f64;
            acc += gauss7(&rho, a, b);
            xs.push(b);
            cum.push(acc);
        }
        // tail x = edge - u^2, du panels from sqrt(delta) down to 0
        let u_max = delta.sqrt();
        for k in 1..=n_tail {
            let ua = u_max * (1.0 - (k - 1) as f64 / n_tail as f64);
            let ub = u_max * (1.0 - k as f64 / n_tail as f64);
            // integral over x in [edge-ua^2, edge-ub^2]
            let g = |u: f64| rho_at(z, edge - u * u) * 2.0 * u;
            acc += gauss7(&g, ub, ua);
            xs.push(edge - ub * ub);
            cum.push(acc);
        }
        Cdf { z, edge, xs, cum }
    }

    /// `int_0^x rho`, clamped to the table range.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.edge {
            return *self.cum.last().unwrap();
        }
        let k = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.cum[i],
            Err(i) => i - 1,
        };
        self.cum[k] + gauss7(&|t: f64| rho_at(self.z, t), self.xs[k], x)
    }

    pub(crate) fn half_mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Invert `int_0^gamma rho = target`.
    pub(crate) fn quantile(&self, target: f64) -> f64 {
        let total = self.half_mass();
        if target >= total {
            return self.edge;
        }
        let k = self
            .cum
            .partition_point(|&c| c < target)
            .min(self.xs.len() - 1);
        let (mut lo, mut hi) = (self.xs[k.saturating_sub(1)], self.xs[k]);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..80 {
            let f = self.eval(x) - target;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = rho_at(self.z, x);
            let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * next.abs().max(1e-12) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Sample the density on `[0, edge]`.
pub fn density(z: Complex64, resolution: usize) -> Result<DensityProfile> {
    if resolution < 8 {
        return Err(Error::ResolutionTooSmall(resolution));
    }
    if z.norm() > 0.99 {
        return Err(Error::Domain(format!(
            "density requires |z| <= 0.99 (got {})",
            z.norm()
        )));
    }
    let edge = locate_edge(z);
    let grid = (0..resolution)
        .map(|k| {
            let x = edge * k as f64 / (resolution - 1) as f64;
            (x, rho_at(z, x))
        })
        .collect();
    Ok(DensityProfile {
        z,
        edge,
        grid,
        quantiles: Vec::new(),
    })
}

/// Quantiles `gamma_i`, `i = 1..=n`, solving `int_0^{gamma_i} rho = i/(2n)`.
pub fn quantiles(profile: &DensityProfile, n: usize) -> Result<Vec<f64>> {
    let cdf = Cdf::new(profile.z);
    Ok((1..=n)
        .map(|i| cdf.quantile(i as f64 / (2.0 * n as f64)))
        .collect())
}

/// The centering integral `int log(x^2 + eta^2) rho^z(x) dx` over the full
/// (symmetric) support, by split quadrature with the log singularity at the
/// origin handled analytically.
pub fn centering_integral(z: Complex64, eta: f64) -> Result<MdeCenterings> {
    if eta < 0.0 {
        return Err(Error::NonpositiveEta(eta));
    }
    if z.norm() > 0.99 {
        return Err(Error::Domain(format!(
            "centering_integral requires |z| <= 0.99 (got {})",
            z.norm()
        )));
    }
    let edge = locate_edge(z);
    let rho0 = rho_at(z, 0.0);
    let x0 = (edge / 4.0).min(0.1);
    let delta = (edge / 8.0).min(0.05);
    let split = edge - delta;
    let log_term = |x: f64| {
        if eta == 0.0 {
            2.0 * x.abs().max(f64::MIN_POSITIVE).ln()
        } else {
            (x * x + eta * eta).ln()
        }
    };
    // analytic: rho(0) * int_0^{x0} log(x^2 + eta^2) dx
    let analytic = if eta == 0.0 {
        rho0 * 2.0 * x0 * (x0.ln() - 1.0)
    } else {
        rho0 * (x0 * (x0 * x0 + eta * eta).ln() - 2.0 * x0 + 2.0 * eta * (x0 / eta).atan())
    };
    let near = adaptive_simpson(
        |x| {
            if x == 0.0 {
                0.0
            } else {
                (rho_at(z, x) - rho0) * log_term(x)
            }
        },
        0.0,
        x0,
        2.5e-11,
    )?;
    let mid = adaptive_simpson(|x| rho_at(z, x) * log_term(x), x0, split, 2.5e-11)?;
    let tail = adaptive_simpson(
        |u| rho_at(z, edge - u * u) * log_term(edge - u * u) * 2.0 * u,
        0.0,
        delta.sqrt(),
        2.5e-11,
    )?;
    Ok(MdeCenterings {
        z,
        eta,
        integral: 2.0 * (analytic + near + mid + tail),
    })
}

/// Centering integral for the flow at time `t`, i.e. against the rescaled
/// density: `int log(x^2 + eta^2) rho_t^z(x) dx
///          = 2 ln c + int log(y^2 + (eta/c)^2) rho^{z/c}(y) dy`, c = sqrt(1+t).
pub fn centering_integral_rescaled(z: Complex64, eta: f64, t: f64) -> Result<MdeCenterings> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0 (got {t})")));
    }
    let c = (1.0 + t).sqrt();
    let inner = centering_integral(z / c, eta / c)?;
    Ok(MdeCenterings {
        z,
        eta,
        integral: 2.0 * c.ln() + inner.integral,
    })
}

/// Solution of the time-rescaled equation `m_t^z(i eta) = m^{z/c}(i eta/c)/c`.
pub fn time_rescaled_mde(z: Complex64, eta: f64, t: f64) -> Result<MdeSolution> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0 (got {t})")));
    }
    let c = (1.0 + t).sqrt();
    let inner = solve_mde(z / c, I * (eta / c))?;
    Ok(MdeSolution {
        z,
        w: I * eta,
        m: inner.m / c,
        u: inner.u,
    })
}

/// `Im m_t^z(i eta)` without constructing the full solution.
fn im_m_t(z: Complex64, eta: f64, t: f64) -> Result<f64> {
    let c = (1.0 + t).sqrt();
    let (v, _) = imag_axis_mu(z / c, eta / c)?;
    Ok(v / c)
}

/// Integrate the characteristic ODE `d eta_t / dt = -Im m_t^{z0}(i eta_t)`
/// backward from `(t_end, eta_end)` to `t = 0` with classical RK4.
/// Returns the path ascending in `t` (so `eta` is strictly decreasing).
pub fn characteristic_path(
    z0: Complex64,
    eta_end: f64,
    t_end: f64,
    steps: usize,
) -> Result<Characteristic> {
    if eta_end <= 0.0 {
        return Err(Error::NonpositiveEta(eta_end));
    }
    if t_end <= 0.0 || steps == 0 {
        return Err(Error::Domain("t_end and steps must be positive".into()));
    }
    // integrate in s = t_end - t, d eta / ds = +Im m_{t_end - s}(i eta)
    let h = t_end / steps as f64;
    let f = |s: f64, eta: f64| im_m_t(z0, eta, t_end - s);
    let mut eta = eta_end;
    let mut rev = Vec::with_capacity(steps + 1);
    rev.push((t_end, eta));
    for k in 0..steps {
        let s = k as f64 * h;
        let k1 = f(s, eta)?;
        let k2 = f(s + 0.5 * h, eta + 0.5 * h * k1)?;
        let k3 = f(s + 0.5 * h, eta + 0.5 * h * k2)?;
        let k4 = f(s + h, eta + h * k3)?;
        eta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::StepUnderflow(t_end - (s + h)));
        }
        rev.push((t_end - (k + 1) as f64 * h, eta));
    }
    rev.reverse();
    Ok(Characteristic { z0, path: rev })
}
