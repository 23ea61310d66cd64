//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix shapes are inconsistent with the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix entry is NaN or infinite.
    #[error("non-finite entry: {0}")]
    NonFinite(String),

    /// The operation is undefined on an all-zero matrix.
    #[error("operation undefined on the zero matrix")]
    ZeroMatrix,

    /// Power iteration exhausted its budget before the Rayleigh-quotient
    /// residual dropped below the requested tolerance.
    #[error("power iteration did not converge within {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Every sampling weight of the requested scheme is zero.
    #[error("all sampling weights are zero")]
    DegenerateWeights,

    /// A sample index falls outside the support of the distribution.
    #[error("index {index} is outside the sampling support")]
    IndexOutOfSupport { index: usize },

    /// A distribution does not cover the column indices it is used with.
    #[error("sampling support mismatch: {0}")]
    SupportMismatch(String),

    /// A scalar argument violates its documented range.
    #[error("argument out of range: {0}")]
    OutOfRange(String),

    /// An experiment configuration fails schema validation.
    #[error("invalid experiment config: {0}")]
    Config(String),

    /// Text input (CSV matrix, probability vector, JSON report) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
