use std::path::PathBuf;

use thiserror::Error;

use crate::garch::GarchFit;
use crate::mean::MeanFit;

pub type Result<T> = std::result::Result<T, Error>;

/// Best estimate reached by an optimizer run that did not meet its
/// convergence criteria.
#[derive(Debug, Clone)]
pub enum BestSoFar {
    Mean(MeanFit),
    Garch(GarchFit),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid differencing order {order} for a series of length {len}")]
    InvalidOrder { order: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("index {index} out of range (length {len})")]
    Index { index: usize, len: usize },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value at index {index}")]
    NumericalOverflow { index: usize },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error(
        "optimizer did not converge after {evals} evaluations (best -loglik {best_neg_loglik})"
    )]
    NotConverged {
        evals: usize,
        best_neg_loglik: f64,
        best: Box<BestSoFar>,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error at {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent user input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidOrder { .. }
                | Error::InvalidArgument(_)
                | Error::Alignment(_)
                | Error::Index { .. }
                | Error::InsufficientData { .. }
                | Error::Schema(_)
                | Error::Validation(_)
                | Error::Parse { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
