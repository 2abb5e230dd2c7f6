//! Quadrature helpers: adaptive Simpson and fixed Gauss-Legendre panels.

use crate::error::{Error, Result};

/// 7-point Gauss-Legendre on [a, b].
pub fn gauss7(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // nodes/weights for [-1, 1]
    const X: [f64; 7] = [
        -0.9491079123427585,
        -0.7415311855993945,
        -0.4058451513773972,
        0.0,
        0.4058451513773972,
        0.7415311855993945,
        0.9491079123427585,
    ];
    const W: [f64; 7] = [
        0.1294849661688697,
        0.2797053914892766,
        0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189,
        0.2797053914892766,
        0.1294849661688697,
    ];
    let c = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let mut s = 0.0;
    for i in 0..7 {
        s += W[i] * f(m + c * X[i]);
    }
    c * s
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "adaptive Simpson depth exhausted on [{a}, {b}]"
        )));
    }
    Ok(adaptive_rec(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)?
        + adaptive_rec(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)?)
}

/// Adaptive Simpson integration of `f` over [a, b] to absolute tolerance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    adaptive_rec(&f, a, fa, b, fb, fm, whole, tol, 48)
}
