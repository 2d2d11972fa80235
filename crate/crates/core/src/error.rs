use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("entry {value} at ({row}, {col}) is outside [-1, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("solver did not converge after {iterations} iterations: {context}")]
    NonConvergence { iterations: usize, context: String },

    #[error("rejection sampler guard tripped: {0}")]
    AcceptanceGuard(String),

    #[error("query matrix is rank deficient")]
    RankDeficient,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("volume estimate degenerate: {0}")]
    DegenerateEstimate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
