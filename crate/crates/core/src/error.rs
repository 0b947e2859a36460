use thiserror::Error;

/// Errors raised by grid, norm, fluid and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} at node {index} ({location})")]
    NonFinite {
        index: usize,
        location: String,
        value: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An inequality's hypothesis does not hold for the requested parameters.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    /// A run exceeded its blow-up guard or produced non-finite values.
    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    /// The Picard iteration did not reach its tolerance.
    #[error("no contraction: {message}")]
    NoContraction {
        message: String,
        trace: Box<crate::evolution::PicardTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
