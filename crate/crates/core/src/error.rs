use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("sobol dimension {requested} exceeds the embedded direction-number table ({supported} dimensions)")]
    UnsupportedDimension { requested: usize, supported: usize },

    #[error("empty point set")]
    EmptyPointSet,

    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point set dimension {got} does not match integrand dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integrability condition violated: {0}")]
    Integrability(String),

    #[error("evaluation point is within {step} of the cube boundary")]
    BoundaryProximity { step: f64 },

    #[error("ode integration failed: {0}")]
    Ode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Error {
    Error::Domain {
        what,
        value,
        domain: domain.into(),
    }
}
