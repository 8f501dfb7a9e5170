use thiserror::Error;

/// Errors raised by model validation and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse model spec: {0}")]
    Parse(#[from] serde_json::Error),

    /// A model invariant does not hold; the message names the violated condition.
    #[error("invalid model: {0}")]
    Invalid(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model is unstable (load {rho:.6} >= 1)")]
    Unstable { rho: f64 },

    #[error("iteration did not converge after {iterations} steps (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ill-conditioned linear system (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("zero variance: {0}")]
    ZeroVariance(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures caused by the input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse(_)
                | Error::Invalid(_)
                | Error::Argument(_)
                | Error::Unstable { .. }
                | Error::ZeroVariance(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
