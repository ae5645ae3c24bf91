//! Runner errors and their process exit codes.

use std::path::PathBuf;

/// Exit status when every hard check passes (inconclusive checks included).
pub const EXIT_OK: i32 = 0;
/// A check failed or the pipeline could not finish.
pub const EXIT_FAILURE: i32 = 1;
/// The config or one of its parameters is invalid.
pub const EXIT_VALIDATION: i32 = 2;
/// A proven inequality was numerically violated.
pub const EXIT_THEOREM_VIOLATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot read {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Core(#[from] ctlab::Error),
    #[error("cannot write {path}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Invalid { path: path.into(), message: message.into() }
    }

    /// Attaches a config path to a library validation error.
    pub fn at(path: impl Into<String>, err: ctlab::Error) -> Self {
        if err.is_validation() {
            RunError::Invalid { path: path.into(), message: err.to_string() }
        } else {
            RunError::Core(err)
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) | RunError::Invalid { .. } => EXIT_VALIDATION,
            RunError::Core(ctlab::Error::TheoremViolation(_)) => EXIT_THEOREM_VIOLATION,
            RunError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            RunError::Io { .. } | RunError::Core(_) | RunError::Output { .. } => EXIT_FAILURE,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;
