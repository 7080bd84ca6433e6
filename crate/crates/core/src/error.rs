use thiserror::Error;

/// Errors raised by the numerical kernels, the engines and the config layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument to {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("no serving base station inside the simulation window")]
    NoServingBs,

    #[error("pilot budget exhausted: {0}")]
    PilotBudget(String),

    #[error("quadrature did not converge in {context}: error estimate {estimate:e}")]
    Quadrature { context: &'static str, estimate: f64 },

    #[error("too few valid trials: {valid} of {requested}")]
    TooFewTrials { valid: usize, requested: usize },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { func, msg: msg.into() }
}
