use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension must be at least 1")]
    InvalidDimension,

    #[error("matrix is not Hermitian (max asymmetry {max_asym:e})")]
    NotHermitian { max_asym: f64 },

    #[error("eigensolver failed to converge at index {index}")]
    NoConvergence { index: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("cannot take a minor of a 1x1 matrix")]
    EmptyMinor,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
