use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("sequence term at index {index} is not finite ({value})")]
    NonFiniteTerm { index: u64, value: f64 },

    #[error("{what} must be positive, got {value} at x = {at}")]
    NonPositive { what: &'static str, at: f64, value: f64 },

    #[error("x = {x} is outside the domain (x > {domain_min}) required by {context}")]
    OutOfDomain { x: f64, domain_min: f64, context: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Inapplicable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable snake_case tag for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Eval(_) => "eval",
            Error::NonFiniteTerm { .. } => "non_finite_term",
            Error::NonPositive { .. } => "non_positive",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Inapplicable(_) => "inapplicable",
            Error::Io(_) => "io",
        }
    }
}
