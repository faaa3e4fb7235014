use thiserror::Error;

/// Every fallible operation in the crate reports one of these. The CLI maps
/// the variants onto its exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("{what} {requested} exceeds cap {cap}")]
    Cap {
        what: String,
        requested: usize,
        cap: usize,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("property violation: {0}")]
    Violation(String),
}

impl LabError {
    pub fn malformed(msg: impl Into<String>) -> Self {
        LabError::Malformed(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        LabError::Precondition(msg.into())
    }

    pub fn cap(what: impl Into<String>, requested: usize, cap: usize) -> Self {
        LabError::Cap {
            what: what.into(),
            requested,
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Reads a positive integer cap from the environment, falling back to `default`.
pub fn env_cap(var: &str, default: usize) -> usize {
    std::env::var(var)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(default)
}

pub const BALL_CAP_VAR: &str = "MORSELAB_BALL_CAP";
pub const ENUM_CAP_VAR: &str = "MORSELAB_ENUM_CAP";
pub const DEFAULT_BALL_CAP: usize = 10;
pub const DEFAULT_ENUM_CAP: usize = 14;

pub fn ball_cap() -> usize {
    env_cap(BALL_CAP_VAR, DEFAULT_BALL_CAP)
}

pub fn enum_cap() -> usize {
    env_cap(ENUM_CAP_VAR, DEFAULT_ENUM_CAP)
}

/// Hard ceiling on the size of any enumerated set, independent of length caps.
pub const MAX_ENUM_SET: usize = 4_000_000;
