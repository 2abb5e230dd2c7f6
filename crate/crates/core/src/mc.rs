//! Monte Carlo estimation of fractional joint moments and field
//! statistics, with reproducible parallel execution.
//!
//! One matrix draw serves all K points of a query (the expectation is over
//! a single matrix). Heavy-tailed weights are the norm here -- second
//! moments of `exp(sum gamma_i Phi)` grow polynomially in N -- so the
//! estimators are plain streaming means in the log domain with the
//! effective sample size as the tripwire, and results carry honesty flags
//! rather than silently degrading.
//!
//! Reproducibility: each sample is keyed by its index through a
//! counter-based stream; reduction is a fixed pairwise tree over batch
//! partials in index order, so the result is bit-identical for any worker
//! count.

use crate::ensembles::{sample_matrix, EnsembleSpec};
use crate::error::{Error, Result};
use crate::mde::{self, MdeCenterings};
use crate::predict::KPointQuery;
use crate::rng::{stream_id, StreamDomain};
use crate::spectral::{self, hermitize_singular_values};
use crate::stats::{csum, logsumexp2, logsumexp_tree, mean, skew_kurtosis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Honesty flags attached to an estimate.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EstimateFlags {
    /// Effective sample size below 8: the estimate is unreliable.
    pub low_ess: bool,
    /// Effective sample size below 1% of the sample count.
    pub heavy_tail: bool,
}

/// Monte Carlo estimate of one K-point moment, on the log scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub query: KPointQuery,
    pub eta: f64,
    pub samples: u64,
    pub rejected: u64,
    /// ln of the sample mean of `exp(sum_i gamma_i Phi(z_i, eta))`.
    pub log_mean: f64,
    /// Delta-method standard error on the ln scale.
    pub std_error: f64,
    /// `(sum w)^2 / sum w^2` over the weights.
    pub ess: f64,
    pub flags: EstimateFlags,
}

/// Partial reduction state of one batch of samples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatchPartial {
    pub batch: u64,
    /// ln sum of weights over accepted samples.
    pub lse_w: f64,
    /// ln sum of squared weights.
    pub lse_w2: f64,
    pub accepted: u64,
    pub rejected: u64,
}

fn combine(a: BatchPartial, b: BatchPartial) -> BatchPartial {
    BatchPartial {
        batch: a.batch.min(b.batch),
        lse_w: logsumexp2(a.lse_w, b.lse_w),
        lse_w2: logsumexp2(a.lse_w2, b.lse_w2),
        accepted: a.accepted + b.accepted,
        rejected: a.rejected + b.rejected,
    }
}

fn combine_tree(parts: &[BatchPartial]) -> BatchPartial {
    match parts.len() {
        0 => BatchPartial {
            batch: 0,
            lse_w: f64::NEG_INFINITY,
            lse_w2: f64::NEG_INFINITY,
            accepted: 0,
            rejected: 0,
        },
        1 => parts[0],
        n => combine(combine_tree(&parts[..n / 2]), combine_tree(&parts[n / 2..])),
    }
}

fn check_query(spec: &EnsembleSpec, q: &KPointQuery) -> Result<()> {
    q.validate()?;
    if spec.n != q.n || spec.class != q.class || spec.kappa4 != q.kappa4 {
        return Err(Error::InvalidConfig(
            "query (n, class, kappa4) must match the ensemble spec".into(),
        ));
    }
    if q.exponents.iter().any(|g| g.im != 0.0 || g.re < 0.0) {
        return Err(Error::Domain(
            "Monte Carlo estimation requires real nonnegative exponents".into(),
        ));
    }
    Ok(())
}

/// Weight exponent `sum_i gamma_i Phi(z_i, eta)` for one draw, or `None`
/// when `eta = 0` meets a numerically zero singular value.
fn draw_weight(
    spec: &EnsembleSpec,
    q: &KPointQuery,
    eta: f64,
    centerings: &[MdeCenterings],
    stream: u64,
) -> Result<Option<f64>> {
    let x = sample_matrix(spec, stream);
    let mut w = 0.0f64;
    for ((z, g), cen) in q.points.iter().zip(&q.exponents).zip(centerings) {
        let sample = hermitize_singular_values(&x, *z)?;
        match spectral::phi_n(&sample, eta, cen) {
            Ok(phi) => w += g.re * phi.value,
            Err(Error::SingularDeterminant) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(w))
}

/// One batch of sample weights reduced to a partial.
fn run_batch(
    spec: &EnsembleSpec,
    q: &KPointQuery,
    eta: f64,
    centerings: &[MdeCenterings],
    master_seed: u64,
    batch: u64,
    lo: u64,
    hi: u64,
) -> Result<BatchPartial> {
    let mut ws = Vec::with_capacity((hi - lo) as usize);
    let mut rejected = 0u64;
    for s in lo..hi {
        let stream = stream_id(master_seed, StreamDomain::McDraw, s);
        match draw_weight(spec, q, eta, centerings, stream)? {
            Some(w) => ws.push(w),
            None => rejected += 1,
        }
    }
    let ws2: Vec<f64> = ws.iter().map(|&w| 2.0 * w).collect();
    Ok(BatchPartial {
        batch,
        lse_w: logsumexp_tree(&ws),
        lse_w2: logsumexp_tree(&ws2),
        accepted: ws.len() as u64,
        rejected,
    })
}

fn finalize(q: &KPointQuery, eta: f64, samples: u64, total: BatchPartial) -> Result<MomentEstimate> {
    if total.accepted == 0 {
        return Err(Error::Domain(
            "all draws were rejected as numerically singular".into(),
        ));
    }
    let acc = total.accepted as f64;
    let log_mean = total.lse_w - acc.ln();
    // ess = (sum w)^2 / sum w^2; SE(ln mean) = sqrt((m2/m^2 - 1) / n)
    let ess = (2.0 * total.lse_w - total.lse_w2).exp();
    let ratio = (total.lse_w2 + acc.ln() - 2.0 * total.lse_w).exp();
    let std_error = ((ratio - 1.0).max(0.0) / acc).sqrt();
    let flags = EstimateFlags {
        low_ess: ess < 8.0,
        heavy_tail: ess < 0.01 * samples as f64,
    };
    Ok(MomentEstimate {
        query: q.clone(),
        eta,
        samples,
        rejected: total.rejected,
        log_mean,
        std_error,
        ess,
        flags,
    })
}

/// Plain Monte Carlo estimate of
/// `ln E prod_i |det(X - z_i)|^{gamma_i} e^{-gamma_i N/2 * centering}`
/// -- that is, the mean of `exp(sum gamma_i Phi(z_i, eta))` -- from
/// `samples` independent draws.
pub fn estimate_kpoint(
    spec: &EnsembleSpec,
    q: &KPointQuery,
    eta: f64,
    samples: u64,
    master_seed: u64,
) -> Result<MomentEstimate> {
    estimate_kpoint_batched(spec, q, eta, samples, master_seed, 256, 0, &mut |_| {})
}

/// Batched variant: samples `[batch_size * resume_from, samples)` are
/// computed (earlier batches are assumed already reduced by the caller),
/// and each finished batch partial is reported through `on_batch` in index
/// order. The reduction is a deterministic pairwise tree over batches.
#[allow(clippy::too_many_arguments)]
pub fn estimate_kpoint_batched(
    spec: &EnsembleSpec,
    q: &KPointQuery,
    eta: f64,
    samples: u64,
    master_seed: u64,
    batch_size: u64,
    resume_from: u64,
    on_batch: &mut dyn FnMut(&BatchPartial),
) -> Result<MomentEstimate> {
    check_query(spec, q)?;
    if samples == 0 || batch_size == 0 {
        return Err(Error::InvalidConfig("samples and batch_size must be > 0".into()));
    }
    let centerings: Vec<MdeCenterings> = q
        .points
        .iter()
        .map(|&z| mde::centering_integral(z, eta))
        .collect::<Result<_>>()?;
    let n_batches = samples.div_ceil(batch_size);
    let parts: Vec<BatchPartial> = (resume_from..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * batch_size;
            let hi = ((b + 1) * batch_size).min(samples);
            run_batch(spec, q, eta, &centerings, master_seed, b, lo, hi)
        })
        .collect::<Result<_>>()?;
    for p in &parts {
        on_batch(p);
    }
    let total = combine_tree(&parts);
    finalize(q, eta, samples, total)
}

/// Reduce previously stored batch partials (resume path). The partials must
/// be the complete set in batch order.
pub fn estimate_from_partials(
    q: &KPointQuery,
    eta: f64,
    samples: u64,
    parts: &[BatchPartial],
) -> Result<MomentEstimate> {
    finalize(q, eta, samples, combine_tree(parts))
}

/// Compact region specification for field scans and chaos grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    /// Open disc of radius `r` centered at the origin.
    Disc { r: f64 },
    /// `{|z| < r} intersect {Im z > 1 - r}`.
    HalfDisc { r: f64 },
    /// Axis-aligned rectangle.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Region {
    pub fn area(&self) -> f64 {
        match *self {
            Region::Disc { r } => std::f64::consts::PI * r * r,
            Region::HalfDisc { r } => {
                // area of {x^2 + y^2 < r^2, y > c} with c = 1 - r
                let c = 1.0 - r;
                if c >= r {
                    return 0.0;
                }
                r * r * (c / r).acos() - c * (r * r - c * c).sqrt()
            }
            Region::Rect { x0, x1, y0, y1 } => (x1 - x0).max(0.0) * (y1 - y0).max(0.0),
        }
    }

    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Region::Disc { r } => (-r, r, -r, r),
            Region::HalfDisc { r } => (-r, r, 1.0 - r, r),
            Region::Rect { x0, x1, y0, y1 } => (x0, x1, y0, y1),
        }
    }

    /// Fraction of the cell `[cx - h/2, cx + h/2] x [cy - h/2, cy + h/2]`
    /// inside the region (exact for rectangles, analytic circle-box overlap
    /// for disc shapes).
    fn cell_weight(&self, cx: f64, cy: f64, h: f64) -> f64 {
        let (x0, x1, y0, y1) = (cx - h / 2.0, cx + h / 2.0, cy - h / 2.0, cy + h / 2.0);
        let area = match *self {
            Region::Disc { r } => circle_rect_overlap(r, x0, x1, y0, y1),
            Region::HalfDisc { r } => {
                let yc = (1.0 - r).max(y0);
                if yc >= y1 {
                    0.0
                } else {
                    circle_rect_overlap(r, x0, x1, yc, y1)
                }
            }
            Region::Rect {
                x0: rx0,
                x1: rx1,
                y0: ry0,
                y1: ry1,
            } => {
                let w = (x1.min(rx1) - x0.max(rx0)).max(0.0);
                let hh = (y1.min(ry1) - y0.max(ry0)).max(0.0);
                w * hh
            }
        };
        area / (h * h)
    }
}

/// Cell weight of a single probe cell against a region (shared with the
/// chaos-grid construction).
pub(crate) fn cell_weight_probe(region: Region, cx: f64, cy: f64, h: f64) -> f64 {
    region.cell_weight(cx, cy, h)
}

/// Area of `{x^2 + y^2 < r^2}` intersected with `[x0,x1] x [y0,y1]`, via
/// the signed primitive of the circular segment.
fn circle_rect_overlap(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    // integral over x of clamp(chord(x)) where chord is [-sqrt(r^2-x^2), sqrt(..)]
    fn strip(r: f64, x0: f64, x1: f64, y: f64) -> f64 {
        // integral of min(y, sqrt(r^2 - x^2)) dx over the part where chord exists,
        // for y >= 0; antiderivative of sqrt(r^2-x^2) is (x sqrt(r^2-x^2) + r^2 asin(x/r))/2
        fn prim(r: f64, x: f64) -> f64 {
            let x = x.clamp(-r, r);
            0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
        }
        debug_assert!(y >= 0.0);
        let a = x0.clamp(-r, r);
        let b = x1.clamp(-r, r);
        if y * y >= r * r {
            // chord everywhere below y: integrate the circle itself
            return prim(r, b) - prim(r, a);
        }
        let xc = (r * r - y * y).sqrt();
        let mut acc = 0.0;
        // |x| < xc: chord above y, the strip is capped at height y
        let ia = a.clamp(-xc, xc);
        let ib = b.clamp(-xc, xc);
        if ib > ia {
            acc += (ib - ia) * y;
        }
        // |x| >= xc: chord below y, integrate the circle
        let lb = b.min(-xc);
        if lb > a {
            acc += prim(r, lb) - prim(r, a);
        }
        let ra = a.max(xc);
        if b > ra {
            acc += prim(r, b) - prim(r, ra);
        }
        acc
    }
    // decompose [y0, y1] strip against the upper half, mirror for lower
    let up = |y: f64| -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            strip(r, x0, x1, y.min(r))
        }
    };
    up(y1) - up(y0) + up(-y0) - up(-y1)
}

/// Grid of centered-field values over a region, one row per draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldScan {
    pub n: usize,
    pub region: Region,
    pub grid: Vec<Complex64>,
    /// Fraction of each cell inside the region.
    pub weights: Vec<f64>,
    pub cell_area: f64,
    pub draws: usize,
    /// `values[d][j] = Phi(grid[j])` for draw `d`; `-inf` marks an exactly
    /// singular evaluation.
    pub values: Vec<Vec<f64>>,
}

/// Evaluate `Phi(z) = ln|det(X - z)| + N (1 - |z|^2)_+ / 2` on a grid for
/// `draws` independent draws. One singular-value decomposition per
/// (draw, grid point).
pub fn scan_field(
    spec: &EnsembleSpec,
    region: Region,
    resolution: usize,
    draws: usize,
    master_seed: u64,
) -> Result<FieldScan> {
    if resolution == 0 {
        return Err(Error::ResolutionTooSmall(resolution));
    }
    let (x0, x1, y0, y1) = region.bounding_box();
    let extent = (x1 - x0).max(y1 - y0);
    if !(extent > 0.0) {
        return Err(Error::InvalidConfig("empty region".into()));
    }
    let h = extent / resolution as f64;
    let mut grid = Vec::new();
    let mut weights = Vec::new();
    let nx = ((x1 - x0) / h).round() as usize;
    let ny = ((y1 - y0) / h).round() as usize;
    for iy in 0..ny.max(1) {
        for ix in 0..nx.max(1) {
            let cx = x0 + (ix as f64 + 0.5) * h;
            let cy = y0 + (iy as f64 + 0.5) * h;
            let w = region.cell_weight(cx, cy, h);
            if w > 1e-12 {
                let z = Complex64::new(cx, cy);
                if z.norm() > 0.95 {
                    return Err(Error::Domain(format!(
                        "scan region must stay inside |z| <= 0.95 (cell at {z})"
                    )));
                }
                grid.push(z);
                weights.push(w.min(1.0));
            }
        }
    }
    let n = spec.n as f64;
    let values: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let x = sample_matrix(
                spec,
                stream_id(master_seed, StreamDomain::FieldScanDraw, d as u64),
            );
            grid.iter()
                .map(|&z| {
                    let s = hermitize_singular_values(&x, z)?;
                    let logdet = csum(s.sigma.iter().map(|&v| v.max(f64::MIN_POSITIVE).ln()));
                    let centered = logdet + n * (1.0 - z.norm_sqr()).max(0.0) / 2.0;
                    Ok(if s.sigma[0] == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        centered
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(FieldScan {
        n: spec.n,
        region,
        grid,
        weights,
        cell_area: h * h,
        draws,
        values,
    })
}

/// Lebesgue measure of the exceedance set `{Phi >= nu ln N}`, averaged over
/// draws. Cells are weighted by their clipped in-region area.
pub fn thick_points(scan: &FieldScan, nu: f64) -> f64 {
    let thr = nu * (scan.n as f64).ln();
    let per_draw: Vec<f64> = scan
        .values
        .iter()
        .map(|row| {
            csum(
                row.iter()
                    .zip(&scan.weights)
                    .filter(|(&v, _)| v >= thr)
                    .map(|(_, &w)| w * scan.cell_area),
            )
        })
        .collect();
    mean(&per_draw)
}

/// Free energy `ln(N int_K e^{gamma Phi}) / (gamma ln N)`, averaged over
/// draws (cell quadrature in the log domain).
pub fn free_energy(scan: &FieldScan, gamma: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    let ln_n = (scan.n as f64).ln();
    let per_draw: Vec<f64> = scan
        .values
        .iter()
        .map(|row| {
            let terms: Vec<f64> = row
                .iter()
                .zip(&scan.weights)
                .map(|(&v, &w)| gamma * v + (w * scan.cell_area).ln())
                .collect();
            (logsumexp_tree(&terms) + ln_n) / (gamma * ln_n)
        })
        .collect();
    mean(&per_draw)
}

/// Limit of the free energy: `1/gamma + gamma/8` up to the freezing point
/// `gamma = 2 sqrt(2)`, constant `1/sqrt(2)` beyond.
pub fn free_energy_prediction(gamma: f64) -> f64 {
    let gc = 2.0 * std::f64::consts::SQRT_2;
    if gamma <= gc {
        1.0 / gamma + gamma / 8.0
    } else {
        1.0 / std::f64::consts::SQRT_2
    }
}

/// Joint normality diagnostics of the normalized log-determinant vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub points: Vec<Complex64>,
    /// `min |z_i - z_j| * sqrt(N)`; absent for a single point.
    pub separation_scaled: Option<f64>,
    pub draws: usize,
    /// Sample covariance of `Psi(z_i) = Phi(z_i, 0) / sqrt(ln N)`.
    pub sample_cov: Vec<Vec<f64>>,
    /// `C_ij = -1/4 ln(|z_i - z_j|^2 + 1/N) / ln N`.
    pub predicted_cov: Vec<Vec<f64>>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// Draws discarded because a shift was numerically singular.
    pub discarded: usize,
}

/// Sample covariance of the normalized log-determinants over `draws`
/// independent matrices against the predicted covariance.
pub fn clt_test(
    spec: &EnsembleSpec,
    points: &[Complex64],
    draws: usize,
    master_seed: u64,
) -> Result<CltReport> {
    if draws < 32 {
        return Err(Error::TooFewDraws { got: draws, min: 32 });
    }
    if points.is_empty() {
        return Err(Error::InvalidConfig("need at least one point".into()));
    }
    let n = spec.n as f64;
    let sqrt_ln_n = n.ln().sqrt();
    let rows: Vec<Option<Vec<f64>>> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let x = sample_matrix(
                spec,
                stream_id(master_seed, StreamDomain::CltDraw, d as u64),
            );
            let mut row = Vec::with_capacity(points.len());
            for &z in points {
                let s = hermitize_singular_values(&x, z)?;
                if s.sigma[0] <= 0.0 {
                    return Ok(None);
                }
                let logdet = csum(s.sigma.iter().map(|&v| v.ln()));
                row.push((logdet - n * (z.norm_sqr() - 1.0) / 2.0) / sqrt_ln_n);
            }
            Ok(Some(row))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    let discarded = draws - kept.len();
    if kept.len() < 32 {
        return Err(Error::TooFewDraws {
            got: kept.len(),
            min: 32,
        });
    }
    let k = points.len();
    let means: Vec<f64> = (0..k)
        .map(|i| mean(&kept.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect();
    let mut sample_cov = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let cov = csum(
                kept.iter()
                    .map(|r| (r[i] - means[i]) * (r[j] - means[j])),
            ) / (kept.len() - 1) as f64;
            sample_cov[i][j] = cov;
            sample_cov[j][i] = cov;
        }
    }
    let ln_n = n.ln();
    let mut predicted_cov = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let d2 = (points[i] - points[j]).norm_sqr();
            predicted_cov[i][j] = -0.25 * (d2 + 1.0 / n).ln() / ln_n;
        }
    }
    let mut skewness = Vec::with_capacity(k);
    let mut excess_kurtosis = Vec::with_capacity(k);
    for i in 0..k {
        let col: Vec<f64> = kept.iter().map(|r| r[i]).collect();
        let (s, ek) = skew_kurtosis(&col);
        skewness.push(s);
        excess_kurtosis.push(ek);
    }
    let mut min_sep = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in points.iter().skip(i + 1) {
            min_sep = min_sep.min((a - b).norm());
        }
    }
    Ok(CltReport {
        n: spec.n,
        points: points.to_vec(),
        separation_scaled: (points.len() > 1).then(|| min_sep * n.sqrt()),
        draws: kept.len(),
        sample_cov,
        predicted_cov,
        skewness,
        excess_kurtosis,
        discarded,
    })
}

/// Per-point variance of the unnormalized log-determinant divided by its
/// leading prediction `(1/4) ln N`.
pub fn logdet_variance_ratio(report: &CltReport, i: usize) -> f64 {
    // Psi carries the 1/sqrt(ln N); Var(ln|det|) = Var(Psi) * ln N
    report.sample_cov[i][i] / 0.25
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EntryLaw, SymmetryClass};
    use crate::special::ginibre_exact_moment;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ginibre(n: usize) -> EnsembleSpec {
        EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n).unwrap()
    }

    fn query(spec: &EnsembleSpec, points: Vec<Complex64>, gammas: Vec<f64>) -> KPointQuery {
        KPointQuery {
            n: spec.n,
            points,
            exponents: gammas.into_iter().map(|g| c(g, 0.0)).collect(),
            class: spec.class,
            kappa4: spec.kappa4,
        }
    }

    #[test]
    fn zero_exponent_gives_exact_unit_mean() {
        let spec = ginibre(8);
        let q = query(&spec, vec![c(0.2, 0.0)], vec![0.0]);
        let e = estimate_kpoint(&spec, &q, 0.1, 64, 7).unwrap();
        assert_eq!(e.log_mean, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert!((e.ess - 64.0).abs() < 1e-9);
    }

    #[test]
    fn matches_kostlan_exact_at_small_n() {
        // K=1, z=0, gamma=2, N=16: z-score <= 3 against the exact moment
        let spec = ginibre(16);
        let q = query(&spec, vec![c(0.0, 0.0)], vec![2.0]);
        let e = estimate_kpoint(&spec, &q, 0.0, 4000, 11).unwrap();
        // E e^{2 Phi(0,0)} = E|det|^2 * e^{N} (centering at z=0 is -N/2 * (-1))
        let exact = ginibre_exact_moment(16, c(2.0, 0.0)).unwrap().re + 16.0;
        let z = (e.log_mean - exact) / e.std_error;
        assert!(z.abs() <= 3.0, "z-score {z}: {} vs {exact}", e.log_mean);
    }

    #[test]
    fn brute_force_small_n_cross_check() {
        // independent route: direct product of singular values, no log path
        let spec = ginibre(4);
        let q = query(&spec, vec![c(0.1, 0.0)], vec![1.0]);
        let e = estimate_kpoint(&spec, &q, 0.0, 5000, 3).unwrap();
        // brute force with its own reduction
        let cen = mde::centering_integral(c(0.1, 0.0), 0.0).unwrap().integral;
        let mut acc = 0.0f64;
        for s in 0..5000u64 {
            let x = sample_matrix(&spec, stream_id(3, StreamDomain::McDraw, s));
            let sv = hermitize_singular_values(&x, c(0.1, 0.0)).unwrap();
            let det: f64 = sv.sigma.iter().product();
            acc += det * (-2.0f64 * cen).exp();
        }
        let brute = (acc / 5000.0).ln();
        assert!(
            (e.log_mean - brute).abs() < 3.0 * e.std_error + 1e-9,
            "{} vs {brute}",
            e.log_mean
        );
    }

    #[test]
    fn discrete_law_singular_draws_rejected_and_counted() {
        // 2x2 sign matrices are singular with probability 1/2; at eta = 0
        // those draws are rejected, counted, and the estimate still returned
        let spec = EnsembleSpec::new(SymmetryClass::Real, EntryLaw::SymmetricBernoulli, 2).unwrap();
        let q = query(&spec, vec![c(0.0, 0.0)], vec![1.0]);
        let e = estimate_kpoint(&spec, &q, 0.0, 400, 31).unwrap();
        assert!(e.rejected > 100 && e.rejected < 300, "rejected {}", e.rejected);
        assert!(e.log_mean.is_finite());
    }

    #[test]
    fn reduction_independent_of_batch_count() {
        let spec = ginibre(12);
        let q = query(&spec, vec![c(0.3, 0.0)], vec![1.0]);
        let a = estimate_kpoint_batched(&spec, &q, 0.0, 333, 5, 256, 0, &mut |_| {}).unwrap();
        let b = estimate_kpoint_batched(&spec, &q, 0.0, 333, 5, 16, 0, &mut |_| {}).unwrap();
        // same samples, same per-sample weights; tree shape differs only
        // across batch boundaries
        assert!((a.log_mean - b.log_mean).abs() < 1e-12);
    }

    #[test]
    fn resume_from_partials_is_exact() {
        let spec = ginibre(12);
        let q = query(&spec, vec![c(0.3, 0.0)], vec![1.0]);
        let mut parts = Vec::new();
        let full =
            estimate_kpoint_batched(&spec, &q, 0.0, 200, 9, 64, 0, &mut |p| parts.push(*p))
                .unwrap();
        parts.sort_by_key(|p| p.batch);
        let resumed = estimate_from_partials(&q, 0.0, 200, &parts).unwrap();
        assert_eq!(full.log_mean, resumed.log_mean);
        assert_eq!(full.ess, resumed.ess);
    }

    #[test]
    fn gamma_ladder_monotone_on_common_draws() {
        let spec = ginibre(24);
        let mut prev = f64::NEG_INFINITY;
        for &g in &[0.25f64, 0.5, 1.0, 2.0, 3.0] {
            let q = query(&spec, vec![c(0.2, 0.0)], vec![g]);
            let e = estimate_kpoint(&spec, &q, 0.0, 500, 21).unwrap();
            assert!(e.log_mean >= prev, "gamma={g}: {} < {prev}", e.log_mean);
            prev = e.log_mean;
        }
    }

    #[test]
    fn eta_regularization_robustness() {
        // |estimate(eta = N^{-1.3}) - estimate(eta = 0)| within the
        // regularization envelope ~ N eta (the deterministic centering
        // shift N eta sqrt(1-|z|^2) dominates at accessible N; the extra
        // slack 0.05 alone only covers it as N -> infinity)
        let n = 32usize;
        let spec = ginibre(n);
        let q = query(&spec, vec![c(0.25, 0.0)], vec![1.0]);
        let e0 = estimate_kpoint(&spec, &q, 0.0, 2000, 13).unwrap();
        let eta = (n as f64).powf(-1.3);
        let e1 = estimate_kpoint(&spec, &q, eta, 2000, 13).unwrap();
        let tol = 3.0 * (e0.std_error.hypot(e1.std_error)) + 0.05 + n as f64 * eta;
        assert!(
            (e0.log_mean - e1.log_mean).abs() <= tol,
            "{} vs {} (tol {tol})",
            e0.log_mean,
            e1.log_mean
        );
    }

    #[test]
    fn region_geometry() {
        let disc = Region::Disc { r: 0.5 };
        assert!((disc.area() - std::f64::consts::PI * 0.25).abs() < 1e-12);
        // full cell inside
        assert!((disc.cell_weight(0.0, 0.0, 0.1) - 1.0).abs() < 1e-12);
        // cell fully outside
        assert_eq!(disc.cell_weight(1.0, 1.0, 0.1), 0.0);
        // half-plane cut through the middle of a centered cell at the top
        let w = disc.cell_weight(0.0, 0.5, 0.2);
        assert!(w > 0.3 && w < 0.7, "{w}");
        // summed cell weights reproduce the disc area
        let h = 0.02;
        let mut area = 0.0;
        let k = (1.0 / h) as i64 + 2;
        for iy in -k..=k {
            for ix in -k..=k {
                area += disc.cell_weight(ix as f64 * h, iy as f64 * h, h) * h * h;
            }
        }
        assert!((area - disc.area()).abs() < 1e-6, "{area}");
        // half-disc area formula vs quadrature
        let hd = Region::HalfDisc { r: 0.8 };
        let mut area = 0.0;
        for iy in -k..=k {
            for ix in -k..=k {
                area += hd.cell_weight(ix as f64 * h, iy as f64 * h, h) * h * h;
            }
        }
        assert!((area - hd.area()).abs() < 1e-6, "{area} vs {}", hd.area());
    }

    #[test]
    fn scan_single_point_matches_phi() {
        let spec = ginibre(16);
        let z = c(0.05, 0.05);
        let region = Region::Rect {
            x0: 0.0,
            x1: 0.1,
            y0: 0.0,
            y1: 0.1,
        };
        let scan = scan_field(&spec, region, 1, 1, 77).unwrap();
        assert_eq!(scan.grid.len(), 1);
        assert!((scan.grid[0] - z).norm() < 1e-12);
        let x = sample_matrix(&spec, stream_id(77, StreamDomain::FieldScanDraw, 0));
        let s = hermitize_singular_values(&x, z).unwrap();
        let want: f64 =
            s.sigma.iter().map(|v| v.ln()).sum::<f64>() + 16.0 * (1.0 - z.norm_sqr()) / 2.0;
        assert!((scan.values[0][0] - want).abs() < 1e-10);
    }

    #[test]
    fn scan_real_class_conjugation_symmetric() {
        let spec = EnsembleSpec::new(SymmetryClass::Real, EntryLaw::Gaussian, 12).unwrap();
        let region = Region::Rect {
            x0: 0.1,
            x1: 0.3,
            y0: -0.2,
            y1: 0.2,
        };
        let scan = scan_field(&spec, region, 4, 1, 5).unwrap();
        // grid is symmetric under conjugation; find mirrored pairs
        for (j, &z) in scan.grid.iter().enumerate() {
            if z.im > 0.0 {
                let mirror = scan
                    .grid
                    .iter()
                    .position(|&w| (w - z.conj()).norm() < 1e-12)
                    .unwrap();
                assert_eq!(scan.values[0][j], scan.values[0][mirror]);
            }
        }
    }

    #[test]
    fn thick_points_thresholds() {
        let spec = ginibre(24);
        let region = Region::Disc { r: 0.4 };
        let scan = scan_field(&spec, region, 8, 4, 19).unwrap();
        // threshold above the max: empty exceedance set
        assert_eq!(thick_points(&scan, 100.0), 0.0);
        // nu = 0: about half the area exceeds; just require strictly positive
        assert!(thick_points(&scan, 0.0) > 0.0);
        // monotone in nu
        assert!(thick_points(&scan, 0.2) >= thick_points(&scan, 0.4));
    }

    #[test]
    fn free_energy_prediction_branches() {
        assert!((free_energy_prediction(1.0) - 1.125).abs() < 1e-15);
        let gc = 2.0 * std::f64::consts::SQRT_2;
        // continuity at the freezing point
        assert!(
            (free_energy_prediction(gc) - free_energy_prediction(gc + 1e-9)).abs() < 1e-9
        );
        assert!((free_energy_prediction(4.0) - 1.0 / std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn clt_report_shape_and_diagonal() {
        let spec = ginibre(48);
        let report = clt_test(&spec, &[c(0.3, 0.0), c(0.0, 0.3)], 64, 23).unwrap();
        // symmetry
        assert_eq!(report.sample_cov[0][1], report.sample_cov[1][0]);
        // diagonal prediction: -1/4 ln(1/N)/ln N = 1/4
        assert!((report.predicted_cov[0][0] - 0.25).abs() < 1e-12);
        // N^{-1/4} separation: C_ij = 1/8 up to O(1/ln N) -- direct algebra
        let n = 256usize;
        let sep = (n as f64).powf(-0.25);
        let d2 = sep * sep;
        let cij = -0.25 * (d2 + 1.0 / n as f64).ln() / (n as f64).ln();
        assert!((cij - 0.125).abs() < 0.05 / (n as f64).ln() + 0.01);
        assert!(clt_test(&spec, &[c(0.3, 0.0)], 8, 1).is_err());
    }
}
