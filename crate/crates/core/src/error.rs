use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("pressure inversion did not converge for f(p) = {target}")]
    RootFind { target: f64 },

    #[error("regularized denominator {value} < 1 at step {step}")]
    Denominator { value: f64, step: usize },

    #[error("singular implicit matrix for mode {k} at dt = {dt}")]
    SingularMode { k: usize, dt: f64 },

    #[error("implicit Yosida solve did not converge at step {step} (residual {residual:e})")]
    NewtonFailure { step: usize, residual: f64 },

    #[error("non-finite value in `{field}` at step {step}")]
    NonFinite { field: &'static str, step: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Step index carried by runtime aborts, if any.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::Denominator { step, .. }
            | Error::NewtonFailure { step, .. }
            | Error::NonFinite { step, .. } => Some(*step),
            _ => None,
        }
    }
}
