use thiserror::Error;

/// Errors raised by model construction, simulation and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("finite-difference stencil does not fit inside the domain at coordinate {coordinate} (value {value:e})")]
    StepTooCloseToBoundary { coordinate: usize, value: f64 },

    #[error("covariance is not positive semidefinite at {x:?}: eigenvalue {eigenvalue:e}")]
    NotPsd { x: Vec<f64>, eigenvalue: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("operation requires a simplex domain")]
    UnsupportedDomain,

    #[error("exact ranked density needs d <= 10 (got d = {0}); use Monte Carlo quadrature instead")]
    UseMonteCarlo(usize),

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("boundary policy exhausted after {0} attempts")]
    BoundaryExhausted(u32),

    #[error("rank index {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("empty path")]
    EmptyPath,

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
