use thiserror::Error;

/// Domain errors, named after the condition they guard.
#[derive(Debug, Clone, Error)]
pub enum OpoError {
    #[error("InvalidParams: {0}")]
    InvalidParams(String),

    /// χ₂² ≥ κ₂κ₃: no below-threshold steady state exists.
    #[error("AboveThreshold: chi2^2 = {chi2_sq} >= kappa2*kappa3 = {kappa_prod}")]
    AboveThreshold { chi2_sq: f64, kappa_prod: f64 },

    #[error("RequiresBelowThreshold: r = {0} must satisfy 0 <= r < 1")]
    RequiresBelowThreshold(f64),

    #[error("SingularCovariance: det = {0}")]
    SingularCovariance(f64),

    #[error("NonSymplectic: deviation {0} exceeds tolerance")]
    NonSymplectic(f64),

    #[error("InvalidState: {0}")]
    InvalidState(String),

    #[error("UnstableAtInfinity: drift eigenvalue with Re = {0} <= 0")]
    UnstableAtInfinity(f64),

    #[error("DimensionCap: Fock dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("InvalidTimeStep: dt = {dt} exceeds stability bound {bound}")]
    InvalidTimeStep { dt: f64, bound: f64 },

    #[error("TraceDrift: |trace - {expected}| = {drift} beyond 1e-6")]
    TraceDrift { drift: f64, expected: f64 },

    #[error("TruncationLeak: trace {0} < 0.999")]
    TruncationLeak(f64),

    #[error("ZeroHeraldProbability")]
    ZeroHeraldProbability,

    #[error("DegenerateCounts: max + min = 0 over the phase grid")]
    DegenerateCounts,

    #[error("RegimeViolation: {0}")]
    RegimeViolation(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for OpoError {
    fn from(e: std::io::Error) -> Self {
        OpoError::Io(e.to_string())
    }
}
