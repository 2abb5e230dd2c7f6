use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported entry law: {0}")]
    UnsupportedLaw(String),

    #[error("eta must be > 0 (got {0})")]
    NonpositiveEta(f64),

    #[error("singular determinant: eta = 0 with a numerically zero singular value")]
    SingularDeterminant,

    #[error("centering mismatch: centering at (z = {have_z}, eta = {have_eta}), requested (z = {want_z}, eta = {want_eta})")]
    CenteringMismatch {
        have_z: Complex64,
        have_eta: f64,
        want_z: Complex64,
        want_eta: f64,
    },

    #[error("self-consistent solve did not converge at z = {z}, w = {w} (residual {residual:.3e})")]
    NoConvergence {
        z: Complex64,
        w: Complex64,
        residual: f64,
    },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("log argument is non-positive ({0:.3e}); parameters outside validity domain")]
    LogDomain(f64),

    #[error("coincident evaluation points with eta = 0: covariance is singular")]
    CoincidentSingular,

    #[error("real symmetry class requires points off the real axis")]
    RealAxis,

    #[error("coincident z-points in query")]
    CoincidentPoints,

    #[error("kernel evaluated at a singular pair")]
    SingularPair,

    #[error("path does not retain the driving noise increments")]
    MissingNoise,

    #[error("step collision at t = {0:.6e}: adaptive halving exhausted")]
    StepCollision(f64),

    #[error("characteristic step underflow at t = {0:.6e}")]
    StepUnderflow(f64),

    #[error("linear algebra backend failure: {routine} returned info = {info}")]
    Linalg { routine: &'static str, info: i32 },

    #[error("resolution too small: {0} < 8")]
    ResolutionTooSmall(usize),

    #[error("covariance clip mass {clip:.3e} exceeds {limit:.3e}: grid too coarse for epsilon")]
    ClipMass { clip: f64, limit: f64 },

    #[error("too few draws: {got} < {min}")]
    TooFewDraws { got: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
