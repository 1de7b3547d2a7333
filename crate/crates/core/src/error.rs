use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge ({context}): estimate {estimate}, error estimate {error_estimate:e}")]
    NonConvergence {
        context: String,
        estimate: Complex64,
        error_estimate: f64,
    },
    #[error("dilation by zero")]
    DegenerateDilation,
    #[error("invalid support: {0}")]
    InvalidSupport(String),
    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),
    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),
    #[error("pairing modes do not match")]
    ModeMismatch,
    #[error("function has support on both half-lines")]
    ParityUndefined,
    #[error("dual convolution nesting depth {0} exceeds the limit of 3")]
    NestingTooDeep(usize),
    #[error("invalid specification: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
