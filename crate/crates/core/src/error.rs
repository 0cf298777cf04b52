use std::path::PathBuf;

/// Errors produced across the screening toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column {column} has zero norm and cannot be normalized")]
    ZeroColumn { column: usize },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("support set is empty")]
    EmptySupport,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "coherence adjustment could not reach mu = {target} (achievable range [{low}, {high}])"
    )]
    AdjustmentFailed { target: f64, low: f64, high: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
