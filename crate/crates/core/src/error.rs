use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SleError {
    #[error("pole of the Gamma function at {at}")]
    Pole { at: f64 },

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("hypergeometric series diverges at z = 1 (c - a - b = {excess})")]
    DivergentAtOne { excess: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point was swallowed at step {step}")]
    Swallowed { step: usize },

    #[error("{0}")]
    Estimation(String),

    #[error("{count} of {n_runs} runs {what} (limit {:.1}%)", 100.0 * limit)]
    RunLimit {
        what: String,
        count: usize,
        n_runs: usize,
        limit: f64,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl SleError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        SleError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for SleError {
    fn from(e: std::io::Error) -> Self {
        SleError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SleError>;
