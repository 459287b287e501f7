use thiserror::Error;

/// Errors raised by estimation, smoothing and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdfError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("insufficient data: need at least {needed} curves, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("point {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("lag {lag} out of range for a sample of {n} curves")]
    LagOutOfRange { lag: i64, n: usize },

    #[error("bandwidth {b} must be below the sample size {n}")]
    Bandwidth { b: f64, n: usize },

    #[error("underdetermined fit: {points} observation points for {basis} basis functions")]
    Underdetermined { points: usize, basis: usize },

    #[error("ill-conditioned problem: {0}")]
    Conditioning(String),

    #[error("degenerate covariance: no eigenvalue above {0:e}")]
    DegenerateCovariance(f64),

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, FdfError>;
