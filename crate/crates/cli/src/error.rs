use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema or validation problem in the plan; nothing was computed.
    #[error("config error in `{field}`: {message}")]
    Config {
        field: String,
        message: String,
        bound: Option<f64>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Core(sch_core::Error),

    /// The run finished and wrote its artifacts but a check did not pass.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> CliError {
        CliError::Config {
            field: field.into(),
            message: message.into(),
            bound: None,
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 2 for configuration problems, 3 for failed checks, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::CheckFailed(_) => 3,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Core(_) => "runtime",
            CliError::CheckFailed(_) => "check_failed",
        }
    }

    /// The structured form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Config { field, bound, .. } => {
                body["field"] = json!(field);
                if let Some(b) = bound {
                    body["bound"] = json!(b);
                }
            }
            CliError::Io { path, .. } => body["path"] = json!(path.display().to_string()),
            CliError::Core(e) => {
                if let Some(t) = e.failure_time() {
                    body["t"] = json!(t);
                }
            }
            CliError::CheckFailed(_) => {}
        }
        json!({ "error": body })
    }
}

/// Errors raised while validating a plan are configuration errors; the
/// same core errors during compute are runtime errors.
pub(crate) fn validation(err: sch_core::Error) -> CliError {
    use sch_core::Error as E;
    match err {
        E::InvalidConfig { field, message } => CliError::Config {
            field,
            message,
            bound: None,
        },
        E::Stability { dt, bound, reason } => CliError::Config {
            field: "dt".into(),
            message: format!("dt = {dt} violates the stability bound {bound} ({reason})"),
            bound: Some(bound),
        },
        E::InvalidEntropy(m) => CliError::config("entropy", m),
        E::Io { path, source } => CliError::io(path, source),
        other => CliError::config("config", other.to_string()),
    }
}

impl From<sch_core::Error> for CliError {
    fn from(e: sch_core::Error) -> CliError {
        match e {
            sch_core::Error::Io { path, source } => CliError::io(path, source),
            other => CliError::Core(other),
        }
    }
}
