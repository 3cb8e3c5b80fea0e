//! Crate-wide error type and result alias.

use std::path::PathBuf;

/// Convenience alias used by every fallible function in this crate.
pub type Result<T> = std::result::Result<T, ArkanError>;

/// Everything that can go wrong across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum ArkanError {
    #[error("series is empty")]
    EmptySeries,

    #[error("series value at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("series is constant after standardization check (std = 0)")]
    DegenerateSeries,

    #[error("series of length {len} is too short, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("split ratio {ratio} leaves an empty train or test side")]
    InvalidSplit { ratio: f64 },

    #[error("max lag {maxlag} is not usable for a series of length {len}")]
    LagTooLarge { maxlag: usize, len: usize },

    #[error("{what} failed: {reason} (condition estimate {condition:.3e})")]
    Estimation {
        what: &'static str,
        reason: &'static str,
        condition: f64,
    },

    #[error("least-squares design matrix is rank deficient")]
    SingularRegression,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid spline grid: {0}")]
    InvalidGrid(String),

    #[error("model document is invalid: {0}")]
    BadDocument(String),

    #[error("unknown tag {tag:?}, expected one of {expected}")]
    UnknownTag { tag: String, expected: &'static str },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path} line {line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ArkanError {
    /// True for errors caused by the caller's input rather than by numerics.
    ///
    /// The CLI maps these to exit code 2 and everything else to exit code 1.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            ArkanError::EmptySeries
                | ArkanError::NonFinite { .. }
                | ArkanError::SeriesTooShort { .. }
                | ArkanError::InvalidSplit { .. }
                | ArkanError::LagTooLarge { .. }
                | ArkanError::InvalidConfig(_)
                | ArkanError::UnknownTag { .. }
                | ArkanError::Io { .. }
                | ArkanError::Malformed { .. }
                | ArkanError::BadDocument(_)
        )
    }
}
