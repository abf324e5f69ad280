use std::io;

use thiserror::Error;

/// Errors surfaced by corpus loading, learning and search.
#[derive(Debug, Error)]
pub enum L2sError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("model error: {0}")]
    Model(String),
}

impl L2sError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        L2sError::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        L2sError::Config(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        L2sError::Model(msg.into())
    }
}

pub type Result<T, E = L2sError> = std::result::Result<T, E>;
