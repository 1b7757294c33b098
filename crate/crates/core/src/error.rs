use thiserror::Error;

/// Errors raised by the estimation, simulation and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("not enough data: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("design moment matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    SingularDesign { condition: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("evaluation point {x} lies outside the supported design range")]
    OutOfSupport { x: f64 },

    #[error("covariance sequence is not positive definite at lag {lag}")]
    NotPositiveDefinite { lag: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_open_unit_half(what: &'static str, value: f64) -> Result<()> {
    if value > 0.5 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "(1/2, 1)",
        })
    }
}

pub(crate) fn check_same_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left, right })
    }
}
