use thiserror::Error;

/// Errors raised by the torus quantization library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operators do not commute: {0}")]
    NotCommuting(String),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension {dim} exceeds the dense guard of {limit}; raise the limit explicitly or use the structured path")]
    DenseGuard { dim: usize, limit: usize },

    #[error("matrix is not normal (commutator residual {0:.3e})")]
    NotNormal(f64),

    #[error("numerical routine failed: {0}")]
    Numerical(String),

    #[error("precision exhausted: {0}; raise the working precision")]
    PrecisionExhausted(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("sign calibration failed: {0}")]
    Calibration(String),

    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
