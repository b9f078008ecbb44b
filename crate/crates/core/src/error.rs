use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("negative or non-finite probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("computation budget exceeded: {needed} terms > limit {limit} ({context})")]
    Budget {
        needed: u128,
        limit: u128,
        context: String,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn budget(needed: u128, limit: u128, context: impl Into<String>) -> Self {
        Error::Budget {
            needed,
            limit,
            context: context.into(),
        }
    }
}
