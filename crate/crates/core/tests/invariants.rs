//! Cross-module invariants that tie the spectral, mde, and mc layers
//! together at moderate sizes.

use gmclab_core::dbm;
use gmclab_core::ensembles::{sample_matrix, EnsembleSpec, EntryLaw, SymmetryClass};
use gmclab_core::mde;
use gmclab_core::rng::{stream_id, StreamDomain};
use gmclab_core::spectral;
use gmclab_core::stats::mean;
use num_complex::Complex64;
use rayon::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn flow_scaling_consistency() {
    // Phi computed from X_t at (z, eta) with the rescaled centering equals
    // Phi computed from X_t / c at (z/c, eta/c) with the plain centering
    let n = 48;
    let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n).unwrap();
    let x0 = sample_matrix(&spec, stream_id(3, StreamDomain::Generic, 0));
    let t = 0.6;
    let xt = dbm::evolve_matrix(&x0, t, stream_id(3, StreamDomain::MatrixEvolve, 0));
    let cph = (1.0 + t).sqrt();
    let z = c(0.3, 0.15);
    let eta = 0.12;

    let s_t = spectral::hermitize_singular_values(&xt, z).unwrap();
    let cen_t = mde::centering_integral_rescaled(z, eta, t).unwrap();
    let phi_t = spectral::phi_n(&s_t, eta, &cen_t).unwrap().value;

    let mut scaled = xt.clone();
    for v in scaled.entries.data.iter_mut() {
        *v /= cph;
    }
    let s_s = spectral::hermitize_singular_values(&scaled, z / cph).unwrap();
    let cen_s = mde::centering_integral(z / cph, eta / cph).unwrap();
    let phi_s = spectral::phi_n(&s_s, eta / cph, &cen_s).unwrap().value;

    assert!(
        (phi_t - phi_s).abs() < 1e-8,
        "{phi_t} vs {phi_s} (diff {:.3e})",
        phi_t - phi_s
    );
}

#[test]
fn local_law_envelope() {
    // |m_N(i eta) - m(i eta)| against the local-law envelope at two scales
    let n = 512usize;
    let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n).unwrap();
    let z = c(0.3, 0.0);
    let draws = 100u64;
    let eta_small = 10.0 / n as f64;
    let sol_small = mde::solve_mde(z, c(0.0, eta_small)).unwrap();
    let sol_unit = mde::solve_mde(z, c(0.0, 1.0)).unwrap();
    let results: Vec<(f64, f64)> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let x = sample_matrix(&spec, stream_id(17, StreamDomain::Generic, d));
            let s = spectral::hermitize_singular_values(&x, z).unwrap();
            (
                spectral::resolvent_deviation(&s, &sol_small, eta_small).unwrap(),
                spectral::resolvent_deviation(&s, &sol_unit, 1.0).unwrap(),
            )
        })
        .collect();
    let bound_small = (n as f64).ln() / (n as f64 * eta_small);
    let bound_unit = 10.0 / n as f64;
    let ok_small = results.iter().filter(|r| r.0 < bound_small).count();
    let ok_unit = results.iter().filter(|r| r.1 < bound_unit).count();
    assert!(
        ok_small * 100 >= draws as usize * 95,
        "mesoscopic: {ok_small}/{draws} under {bound_small:.3e}"
    );
    assert!(
        ok_unit * 100 >= draws as usize * 95,
        "macroscopic: {ok_unit}/{draws} under {bound_unit:.3e}"
    );
    for (a, b) in &results {
        assert!(*a >= 0.0 && *b >= 0.0);
    }
}

#[test]
fn mean_centered_field_is_small() {
    // |mean Phi_N(z)| <= 2 + ln(N)/4 over draws at fixed z
    let n = 256usize;
    let spec = EnsembleSpec::new(SymmetryClass::Complex, EntryLaw::Gaussian, n).unwrap();
    let z = c(0.4, 0.1);
    let vals: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|d| {
            let x = sample_matrix(&spec, stream_id(29, StreamDomain::Generic, d));
            let s = spectral::hermitize_singular_values(&x, z).unwrap();
            let logdet: f64 = s.sigma.iter().map(|v| v.ln()).sum();
            logdet + n as f64 * (1.0 - z.norm_sqr()) / 2.0
        })
        .collect();
    let m = mean(&vals);
    assert!(m.abs() <= 2.0 + (n as f64).ln() / 4.0, "mean = {m}");
}

#[test]
fn quantiles_against_dbm_closed_form() {
    // the general quantile machinery at z = 0 agrees with the closed-form
    // semicircle inversion used by the flow module
    let prof = mde::density(c(0.0, 0.0), 32).unwrap();
    let n = 64;
    let gs = mde::quantiles(&prof, n).unwrap();
    for (i, &g) in gs.iter().enumerate() {
        let p = (i + 1) as f64 / (2.0 * n as f64);
        // invert the closed-form semicircle CDF by bisection
        let cdf = |x: f64| {
            (x * (4.0 - x * x).max(0.0).sqrt() / 2.0 + 2.0 * (x / 2.0).asin())
                / (2.0 * std::f64::consts::PI)
        };
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((g - 0.5 * (lo + hi)).abs() < 1e-7, "i = {}", i + 1);
    }
}
