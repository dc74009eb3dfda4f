use thiserror::Error;

/// Errors raised by model construction, belief updates and solving.
#[derive(Debug, Error)]
pub enum Error {
    /// A table, distribution or parameter failed its consistency checks.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Bayes normalizer vanished: the observation cannot occur under the
    /// belief and action.
    #[error("observation `{observation}` has zero likelihood after action `{action}`")]
    ZeroLikelihood { action: String, observation: String },

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
