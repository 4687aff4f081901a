use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0} (supported: 1..=3)")]
    InvalidDimension(usize),
    #[error("grid points must be a power of two >= 8, got {0}")]
    NonPowerOfTwo(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("weight overflow: weighted field exceeds {cap:.1e} at node {node}")]
    WeightOverflow { node: usize, cap: f64 },
    #[error("generator matrix is not Hermitian: max |A - A^H| = {0:.3e}")]
    NonHermitian(f64),
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(&'static str),
    #[error("negative-time dissipative evolution rejected (a > 0, t = {0})")]
    NegativeTimeDissipative(f64),
    #[error("containment violation: boundary/max ratio {ratio:.3e} exceeds {tol:.1e} at t = {t}")]
    ContainmentViolation { t: f64, ratio: f64, tol: f64 },
    #[error("blowup: norm grew by factor {0:.3e} over the initial norm")]
    Blowup(f64),
    #[error("Picard iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("unsupported weight kind: {0}")]
    UnsupportedWeightKind(&'static str),
    #[error("degenerate norm: Q(t) = {0:.3e} below 1e-300")]
    DegenerateNorm(f64),
    #[error("nonpositive value in log-convexity input at index {0}")]
    NonpositiveValue(usize),
    #[error("decay fit rejected: log-scale residual {0:.3e} exceeds 0.1")]
    FitRejected(f64),
    #[error("interpolation out of range: scale {scale:.6} needs source support inside |y| <= {required:.3}")]
    InterpolationOutOfRange { scale: f64, required: f64 },
    #[error("support violation: test field does not vanish on the {0} margin")]
    SupportViolation(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
