//! Error type shared by every module of the crate.

use std::fmt;

/// Which tail of a density profile an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("numerical blowup at step {step}")]
    Blowup { step: usize },

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("insufficient tail data on the {side} side: {nodes} nodes in window (need {needed})")]
    InsufficientTail {
        side: Side,
        nodes: usize,
        needed: usize,
    },

    #[error("tail fit failed on the {side} side: slope {slope} is not negative")]
    FitFailure { side: Side, slope: f64 },

    #[error("classification unavailable: both tail fits failed")]
    ClassificationUnavailable,

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end; distinct per variant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 10,
            Error::DegenerateState(_) => 11,
            Error::Parameter(_) => 12,
            Error::Config { .. } => 2,
            Error::Blowup { .. } => 13,
            Error::Singular { .. } => 14,
            Error::InsufficientTail { .. } => 15,
            Error::FitFailure { .. } => 16,
            Error::ClassificationUnavailable => 17,
            Error::Parse { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
