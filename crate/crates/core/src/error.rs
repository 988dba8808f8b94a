use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("local slot {slot} outside the transient window 1..={max}")]
    SlotOutOfRange { slot: usize, max: usize },

    #[error("transmission success probability {0} outside [0, 1]")]
    TspOutOfRange(f64),

    #[error("latency distribution undefined: success probability is zero")]
    NoSuccesses,

    #[error("path enumeration limited to duty cycles of at most {max} slots (got {got})")]
    EnumerationTooLarge { got: usize, max: usize },

    #[error("special function domain error: {0}")]
    Domain(String),

    #[error("beta quantile did not converge for p = {0}")]
    QuantileNonConvergence(f64),

    #[error("degenerate beta approximation: M2 - M1^2 = {0:e}")]
    DegenerateBeta(f64),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("empty realization: no devices were placed")]
    EmptyRealization,

    #[error("no link has at least {0} recorded attempts")]
    NoQualifyingLinks(u64),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
