//! Numerical laboratory for spectral statistics of i.i.d. non-Hermitian
//! random matrices.
//!
//! The crate samples real and complex i.i.d. matrix ensembles, computes
//! singular-value data of `X - z`, solves the scalar self-consistent
//! (Dyson) equation for the deterministic spectral density, and evaluates
//! closed-form predictions for fractional moments of characteristic
//! polynomials. Monte Carlo estimators, a singular-value Dyson Brownian
//! motion integrator, and a log-correlated Gaussian field sampler sit on
//! top of those primitives so predictions and simulations can be compared
//! at matching parameters.
//!
//! Modules map onto the main subsystems:
//!
//! * [`ensembles`] — entry laws, fourth cumulants, reproducible draws
//! * [`spectral`] — singular values of `X - z`, regularized log-determinants
//! * [`mde`] — self-consistent equation, density, quantiles, centerings
//! * [`special`] — log-Gamma, Barnes G, exact Ginibre moments
//! * [`predict`] — covariance functionals and K-point moment predictions
//! * [`mc`] — Monte Carlo moment estimates, field scans, CLT diagnostics
//! * [`dbm`] — singular-value Dyson Brownian motion and the local factor
//! * [`gmcfield`] — regularized Gaussian field and chaos measures

pub mod dbm;
pub mod ensembles;
pub mod error;
pub mod gmcfield;
pub mod linalg;
pub mod mc;
pub mod mde;
pub mod predict;
pub mod quad;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
