use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data is not linearly separable through the origin")]
    NotSeparable,

    #[error("oracle size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("no consistent activity pattern found at lambda = {lambda}")]
    NoConsistentPattern { lambda: f64 },

    #[error("could not bracket lambda' within [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },

    #[error("power iteration did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("{0} is undefined for the zero vector")]
    ZeroVector(&'static str),

    #[error("dataset must contain both classes")]
    SingleClass,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
