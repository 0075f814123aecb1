//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by library operations.
///
/// `Numeric` marks failures that occur during optimization or training after
/// inputs were validated (non-finite gradients and the like); everything else
/// is an input, configuration, or parsing problem. The CLI maps the former to
/// exit code 3 and the latter to exit code 2.
#[derive(Debug, Error)]
pub enum ScfeError {
    #[error("dimension mismatch: {0}")]
    Dim(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl ScfeError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ScfeError::Invalid(msg.into())
    }

    pub fn dim(msg: impl Into<String>) -> Self {
        ScfeError::Dim(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        ScfeError::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        ScfeError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        ScfeError::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, ScfeError>;
