//! Error type shared across the crate.

use crate::process::VariableKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Correlation matrix failed the positive semi-definiteness check.
    /// `order` is the first leading principal minor that is negative.
    #[error("correlation matrix is not positive semi-definite: leading minor of order {order} is negative")]
    NotPositiveSemiDefinite { order: usize },

    /// A valuation needed a series the path bundle does not carry.
    #[error("path bundle is missing a {kind} series for security {security}")]
    MissingSeries { kind: VariableKind, security: usize },

    /// Two inputs that must share a discretization do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A value left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A checkpoint record could not be replayed.
    #[error("checkpoint corrupt at line {line}: {reason}")]
    CheckpointCorrupt { line: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
