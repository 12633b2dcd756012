use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} nodes vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("mollifier under-resolved: delta = {delta} < 2h = {min}")]
    UnderResolved { delta: f64, min: f64 },

    #[error("invalid entropy: {0}")]
    InvalidEntropy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("dt = {dt} violates the stability bound {bound} ({reason})")]
    Stability { dt: f64, bound: f64, reason: String },

    #[error("blow-up or instability at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("trajectory carries no Wiener increments")]
    MissingIncrements,

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Time of failure for errors raised while stepping a path.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            Error::BlowUp { t, .. } => Some(*t),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
