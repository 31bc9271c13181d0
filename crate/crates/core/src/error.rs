use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the domain of {function}: {reason}")]
    Domain { function: &'static str, reason: String },

    #[error("{function} has a pole at the requested argument")]
    Pole { function: &'static str },

    #[error("series did not converge after {terms} terms (last term magnitude {last_term:e})")]
    ConvergenceFailure { terms: usize, last_term: f64 },

    #[error("power-series representation diverges here (gate {gate:.4} >= 1)")]
    OutsideApproach1Domain { gate: f64 },

    #[error("alternating series lost precision (cancellation ratio {ratio:e})")]
    Cancellation { ratio: f64 },

    #[error("{0}")]
    Unavailable(String),

    #[error("mean SNR is zero (alpha = 1 removes all transmit power)")]
    DegenerateScenario,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain { function, reason: reason.into() }
}
