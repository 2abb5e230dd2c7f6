//! Small statistical helpers shared across modules.

/// Neumaier compensated sum.
pub fn csum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// log(exp(a) + exp(b)) without overflow.
pub fn logsumexp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Pairwise-tree log-sum-exp over a slice in index order. Deterministic for
/// a fixed input ordering regardless of how the inputs were produced.
pub fn logsumexp_tree(values: &[f64]) -> f64 {
    match values.len() {
        0 => f64::NEG_INFINITY,
        1 => values[0],
        n => {
            let mid = n / 2;
            logsumexp2(logsumexp_tree(&values[..mid]), logsumexp_tree(&values[mid..]))
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    csum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    csum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

/// Sample skewness and excess kurtosis.
pub fn skew_kurtosis(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = mean(values);
    let m2 = csum(values.iter().map(|v| (v - m).powi(2))) / n;
    let m3 = csum(values.iter().map(|v| (v - m).powi(3))) / n;
    let m4 = csum(values.iter().map(|v| (v - m).powi(4))) / n;
    if m2 <= 0.0 {
        return (0.0, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x: Vec<f64> = a.to_vec();
    let mut y: Vec<f64> = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic p-value for the two-sample KS statistic.
pub fn ks_two_sample_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    // Kolmogorov tail series
    let mut p = 0.0f64;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k as i32 + 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// One-sample KS statistic against a CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x: Vec<f64> = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let num = csum(x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)));
    let den = csum(x.iter().map(|&a| (a - mx) * (a - mx)));
    num / den
}

/// Product of two f64 with its rounding error (`fma`-based twoprod).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Compensated sum of exact products: sum of `a_i * b_i` in twice-working
/// precision, rounded once at the end.
pub fn dot_compensated(terms: &[(f64, f64)]) -> f64 {
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for &(a, b) in terms {
        let (p, e) = two_prod(a, b);
        let t = hi + p;
        let err = if hi.abs() >= p.abs() {
            (hi - t) + p
        } else {
            (p - t) + hi
        };
        hi = t;
        lo += err + e;
    }
    hi + lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_handles_large_args() {
        let v = [1234.0, 1232.0];
        let expect = 1232.0 + (2.0f64.exp() + 1.0).ln();
        assert!((logsumexp_tree(&v) - expect).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_tree_matches_direct() {
        let v: Vec<f64> = (0..17).map(|i| (i as f64 * 0.37).sin()).collect();
        let direct = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((logsumexp_tree(&v) - direct).abs() < 1e-12);
    }

    #[test]
    fn ks_statistic_identical_samples() {
        let a = [0.1, 0.4, 0.9];
        assert!(ks_two_sample(&a, &a) < 1e-12);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((ls_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dot_compensated_cancellation() {
        // 1e16 + 1 - 1e16 in products
        let terms = [(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0)];
        assert_eq!(dot_compensated(&terms), 1.0);
    }
}
