use thiserror::Error;

/// Errors raised by the solver, metrics, simulator and sweep engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoevoError {
    /// A parameter or argument is outside its admissible domain.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("bisection did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// The society is purely collectivistic (w = 1); welfare is a point mass at zero.
    #[error("degenerate steady state (w = 1): {0} is undefined")]
    Degenerate(&'static str),

    #[error("alive agents exceeded the hard cap of {cap}")]
    Resource { cap: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A theorem check was requested outside the region where the claim is stated.
    #[error("guard violated for {claim}: {reason}")]
    GuardViolation { claim: &'static str, reason: String },
}

impl CoevoError {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        CoevoError::Domain {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoevoError>;
