//! Command-line plumbing for the ehglue suites: configuration, reports, the background cache.

pub mod config;
pub mod report;
pub mod suites;

use std::fmt;

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config { key: String, message: String },
    Compute { suite: String, message: String },
    Io(String),
}

impl RunError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => EXIT_CONFIG,
            RunError::Compute { .. } | RunError::Io(_) => EXIT_COMPUTE,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config { key, message } => write!(f, "config error in `{key}`: {message}"),
            RunError::Compute { suite, message } => write!(f, "suite {suite} failed: {message}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}
