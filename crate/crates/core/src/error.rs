//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    /// Labels are reported 1-based, matching every external format.
    #[error("label {label} out of range 1..={k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// A selected relabelling method is missing one of its required inputs.
    #[error("method {method} requires input `{input}`")]
    MissingInput { method: String, input: String },

    #[error("did not converge: {0}")]
    NonConvergent(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0}")]
    Usage(String),

    #[error("array file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: usage errors exit 1, data errors exit 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::MissingInput { .. } => 1,
            _ => 2,
        }
    }
}
