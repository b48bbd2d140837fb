//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by construction, validation, and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A problem dimension exceeds a hard resource cap.
    #[error("{what} = {got} exceeds the supported cap of {cap}")]
    SizeCap {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    /// An objective returned NaN or infinity during optimization.
    #[error("objective returned a non-finite value at parameters {at:?}")]
    NonFiniteObjective { at: Vec<f64> },

    /// The GP kernel matrix stayed non-positive-definite after jitter escalation.
    #[error("kernel matrix is not positive definite (jitter escalation exhausted)")]
    KernelNotPositiveDefinite,

    /// A summary was requested over a record set with no successful runs.
    #[error("no successful runs to summarize")]
    NoSuccessfulRuns,

    /// JSON (de)serialization failure.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// File I/O failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
