//! Girko Hermitization: singular values of `X - z`, the regularized
//! log-characteristic polynomial, and the empirical Stieltjes transform.
//!
//! Singular values of the `N x N` shift are computed directly; they equal
//! the nonnegative spectrum of the `2N x 2N` Hermitization at half the
//! cost. The dense Hermitization survives as a small-N test oracle.

use crate::ensembles::{MatrixDraw, SymmetryClass};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::mde::{MdeCenterings, MdeSolution};
use crate::stats::csum;
use num_complex::Complex64;

/// Ratio below which a singular value counts as numerically zero.
pub const SINGULAR_RATIO: f64 = 1e-13;

/// Ascending singular values of `X - z` for one draw.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub z: Complex64,
    pub n: usize,
    pub sigma: Vec<f64>,
}

/// Regularized log-determinant value at one `(z, eta)`.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedLogDet {
    pub z: Complex64,
    pub eta: f64,
    pub value: f64,
}

/// Singular values of `X - z I`, ascending.
///
/// For a real draw the spectrum is invariant under `z -> conj(z)`; the
/// argument is canonicalized to the closed upper half plane so the equality
/// holds exactly, not just up to backend rounding.
pub fn hermitize_singular_values(x: &MatrixDraw, z: Complex64) -> Result<SpectralSample> {
    let z_eff = if x.class == SymmetryClass::Real && z.im < 0.0 {
        z.conj()
    } else {
        z
    };
    let sigma = linalg::singular_values(x.entries.shifted(z_eff))?;
    Ok(SpectralSample {
        z: z_eff,
        n: x.n,
        sigma,
    })
}

/// The regularized log-characteristic polynomial
/// `1/2 sum_i log(sigma_i^2 + eta^2) - (N/2) * centering.integral`.
///
/// The centering must have been computed at the same `(z, eta)`; at
/// `eta = 0` all singular values must be bounded away from zero.
pub fn phi_n(
    sample: &SpectralSample,
    eta: f64,
    centering: &MdeCenterings,
) -> Result<RegularizedLogDet> {
    if eta < 0.0 {
        return Err(Error::NonpositiveEta(eta));
    }
    if centering.z != sample.z || centering.eta != eta {
        return Err(Error::CenteringMismatch {
            have_z: centering.z,
            have_eta: centering.eta,
            want_z: sample.z,
            want_eta: eta,
        });
    }
    let random_part = random_part(&sample.sigma, eta)?;
    Ok(RegularizedLogDet {
        z: sample.z,
        eta,
        value: random_part - sample.n as f64 / 2.0 * centering.integral,
    })
}

/// `1/2 sum_i log(sigma_i^2 + eta^2)` with the eta = 0 singularity guard.
pub(crate) fn random_part(sigma: &[f64], eta: f64) -> Result<f64> {
    let max = sigma.last().copied().unwrap_or(0.0);
    if eta == 0.0 {
        if sigma.first().copied().unwrap_or(0.0) <= SINGULAR_RATIO * max {
            return Err(Error::SingularDeterminant);
        }
        Ok(csum(sigma.iter().map(|&s| s.ln())))
    } else {
        Ok(0.5 * csum(sigma.iter().map(|&s| (s * s + eta * eta).ln())))
    }
}

/// Empirical Stieltjes transform of the Hermitized spectrum on the
/// imaginary axis: `i (1/N) sum_i eta / (sigma_i^2 + eta^2)`.
pub fn empirical_stieltjes(sample: &SpectralSample, eta: f64) -> Result<Complex64> {
    if eta <= 0.0 {
        return Err(Error::NonpositiveEta(eta));
    }
    let s = csum(
        sample
            .sigma
            .iter()
            .map(|&x| eta / (x * x + eta * eta)),
    ) / sample.n as f64;
    Ok(Complex64::new(0.0, s))
}

/// `|m_N(i eta) - m(i eta)|`, the local-law deviation diagnostic.
pub fn resolvent_deviation(sample: &SpectralSample, mde: &MdeSolution, eta: f64) -> Result<f64> {
    if eta <= 0.0 {
        return Err(Error::NonpositiveEta(eta));
    }
    let m_n = empirical_stieltjes(sample, eta)?;
    Ok((m_n - mde.m).norm())
}

/// Eigenvalues of the dense `2N x 2N` Hermitization (ascending); the
/// small-N oracle for the singular-value path.
pub fn dense_hermitization_eigenvalues(x: &MatrixDraw, z: Complex64) -> Result<Vec<f64>> {
    let n = x.n;
    let shifted = x.entries.shifted(z);
    let mut h = CMat::zeros(2 * n);
    for j in 0..n {
        for i in 0..n {
            *h.at_mut(i, n + j) = shifted.at(i, j);
            *h.at_mut(n + j, i) = shifted.at(i, j).conj();
        }
    }
    linalg::hermitian_eigenvalues(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, EnsembleSpec, EntryLaw, SymmetryClass};
    use crate::mde;
    use crate::rng::{stream_id, StreamDomain};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zero_draw(n: usize) -> MatrixDraw {
        MatrixDraw {
            class: SymmetryClass::Complex,
            n,
            seed: 0,
            entries: CMat::zeros(n),
        }
    }

    #[test]
    fn zero_matrix_shift() {
        let d = zero_draw(6);
        let s = hermitize_singular_values(&d, c(0.5, 0.0)).unwrap();
        for v in s.sigma {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_matrix() {
        let mut d = zero_draw(5);
        for i in 0..5 {
            *d.entries.at_mut(i, i) = c(1.0, 0.0);
        }
        let s = hermitize_singular_values(&d, c(0.0, 0.0)).unwrap();
        for v in s.sigma {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn product_of_singular_values_matches_lu_determinant() {
        let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, 48).unwrap();
        let x = sample_matrix(&spec, stream_id(5, StreamDomain::Generic, 1));
        let z = c(0.3, -0.1);
        let s = hermitize_singular_values(&x, z).unwrap();
        let from_svd: f64 = s.sigma.iter().map(|v| v.ln()).sum();
        let from_lu = linalg::lu_log_abs_det(x.entries.shifted(z)).unwrap();
        assert!(
            (from_svd - from_lu).abs() < 1e-8 * from_lu.abs().max(1.0),
            "{from_svd} vs {from_lu}"
        );
    }

    #[test]
    fn matches_dense_hermitization_oracle() {
        let spec = EnsembleSpec::new(SymmetryClass::Real, EntryLaw::Uniform, 32).unwrap();
        let x = sample_matrix(&spec, stream_id(2, StreamDomain::Generic, 7));
        let z = c(0.2, 0.4);
        let s = hermitize_singular_values(&x, z).unwrap();
        let dense = dense_hermitization_eigenvalues(&x, z).unwrap();
        // nonnegative half of the dense spectrum, ascending
        for (i, &sv) in s.sigma.iter().enumerate() {
            let ev = dense[32 + i];
            assert!((sv - ev).abs() < 1e-8, "i={i}: {sv} vs {ev}");
            // chiral symmetry of the 2N spectrum
            assert!((dense[31 - i] + ev).abs() < 1e-8);
        }
    }

    #[test]
    fn phi_identity_at_eta_zero() {
        // Phi(z, 0) = ln|det(X - z)| - N(|z|^2 - 1)/2 up to quadrature error
        let n = 32;
        let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n).unwrap();
        let x = sample_matrix(&spec, stream_id(3, StreamDomain::Generic, 0));
        let z = c(0.4, 0.1);
        let s = hermitize_singular_values(&x, z).unwrap();
        let cen = mde::centering_integral(z, 0.0).unwrap();
        let phi = phi_n(&s, 0.0, &cen).unwrap().value;
        let logdet = linalg::lu_log_abs_det(x.entries.shifted(z)).unwrap();
        let want = logdet - n as f64 * (z.norm_sqr() - 1.0) / 2.0;
        // quadrature tolerance on the centering integral is 1e-6 * N/2
        assert!((phi - want).abs() < 1e-6 * n as f64, "{phi} vs {want}");
    }

    #[test]
    fn phi_random_part_monotone_in_eta() {
        let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, 24).unwrap();
        let x = sample_matrix(&spec, stream_id(4, StreamDomain::Generic, 2));
        let s = hermitize_singular_values(&x, c(0.1, 0.0)).unwrap();
        let a = random_part(&s.sigma, 0.05).unwrap();
        let b = random_part(&s.sigma, 0.2).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn phi_centering_mismatch_and_singular_errors() {
        let d = zero_draw(4);
        let s = hermitize_singular_values(&d, c(0.5, 0.0)).unwrap();
        let cen = mde::centering_integral(c(0.5, 0.0), 0.1).unwrap();
        assert!(matches!(
            phi_n(&s, 0.2, &cen),
            Err(Error::CenteringMismatch { .. })
        ));
        // eta = 0 with an exactly singular shift
        let s0 = hermitize_singular_values(&d, c(0.0, 0.0)).unwrap();
        let cen0 = mde::centering_integral(c(0.0, 0.0), 0.0).unwrap();
        assert!(matches!(
            phi_n(&s0, 0.0, &cen0),
            Err(Error::SingularDeterminant)
        ));
    }

    #[test]
    fn conjugation_invariance_for_real_draws() {
        let spec = EnsembleSpec::new(SymmetryClass::Real, EntryLaw::Gaussian, 20).unwrap();
        let x = sample_matrix(&spec, stream_id(6, StreamDomain::Generic, 3));
        let z = c(0.3, 0.25);
        let a = hermitize_singular_values(&x, z).unwrap();
        let b = hermitize_singular_values(&x, z.conj()).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn stieltjes_direct_sum_and_tail() {
        let mut d = zero_draw(8);
        for i in 0..8 {
            *d.entries.at_mut(i, i) = c(1.0, 0.0);
        }
        let s = hermitize_singular_values(&d, c(0.0, 0.0)).unwrap();
        // all sigma = 1, eta = 1 -> i/2
        let m = empirical_stieltjes(&s, 1.0).unwrap();
        assert!((m - c(0.0, 0.5)).norm() < 1e-14);
        // eta -> infinity: eta * Im m -> 1
        let eta = 1e4;
        let m = empirical_stieltjes(&s, eta).unwrap();
        assert!((eta * m.im - 1.0).abs() < 2.0 / (eta * eta));
        assert!(empirical_stieltjes(&s, 0.0).is_err());
    }

    #[test]
    fn ward_identity_on_dense_resolvent() {
        // sum_i |G_ia|^2 = Im G_aa / eta for the 2N resolvent at w = i eta
        let n = 12;
        let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n).unwrap();
        let x = sample_matrix(&spec, stream_id(7, StreamDomain::Generic, 4));
        let z = c(0.2, 0.1);
        let shifted = x.entries.shifted(z);
        let mut h = CMat::zeros(2 * n);
        for j in 0..n {
            for i in 0..n {
                *h.at_mut(i, n + j) = shifted.at(i, j);
                *h.at_mut(n + j, i) = shifted.at(i, j).conj();
            }
        }
        // G = (H - i eta)^{-1} column by column via Gaussian elimination
        let eta = 0.37;
        let dim = 2 * n;
        let mut aug = CMat::zeros(dim);
        for j in 0..dim {
            for i in 0..dim {
                *aug.at_mut(i, j) = h.at(i, j);
            }
            *aug.at_mut(j, j) -= Complex64::new(0.0, eta);
        }
        // invert by solving A G = I (naive elimination is fine at this size)
        let mut a = vec![vec![Complex64::new(0.0, 0.0); 2 * dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                a[i][j] = aug.at(i, j);
            }
            a[i][dim + i] = Complex64::new(1.0, 0.0);
        }
        for col in 0..dim {
            let piv = (col..dim)
                .max_by(|&p, &q| a[p][col].norm().total_cmp(&a[q][col].norm()))
                .unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for j in col..2 * dim {
                a[col][j] /= d;
            }
            for i in 0..dim {
                if i != col {
                    let f = a[i][col];
                    for j in col..2 * dim {
                        let v = a[col][j];
                        a[i][j] -= f * v;
                    }
                }
            }
        }
        for aa in [0usize, n, 2 * n - 1] {
            let lhs: f64 = (0..dim).map(|i| a[i][dim + aa].norm_sqr()).sum();
            let rhs = a[aa][dim + aa].im / eta;
            assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "a={aa}");
        }
    }
}
