//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by every module of the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two vectors (or a vector and a model) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A value does not fit the fixed-point field encoding.
    #[error("coordinate {index} with value {value} exceeds the encodable range ±{bound}")]
    Range {
        index: usize,
        value: f64,
        bound: f64,
    },

    /// Fewer secret shares than the reconstruction threshold.
    #[error("threshold not met: need {needed} shares, have {available}")]
    Threshold { needed: usize, available: usize },

    /// A protocol party received something it cannot accept.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A scenario or configuration failed validation.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Client refused to participate under the announced aggregation threshold.
    #[error("client refused: {0}")]
    Refused(String),

    /// Reading or writing an artifact failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// An encoded artifact could not be parsed.
    #[error("decode error: {0}")]
    Decode(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Decode(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
