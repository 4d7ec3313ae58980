use alloc::string::String;

/// Failure modes of the numerical pipelines.
///
/// The variants are grouped so that callers can map them onto the three
/// outcome classes of a run: bad input, a violated modelling hypothesis,
/// or a numerical failure of a solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypothesis violated: {check} (value {value})")]
    Hypothesis { check: String, value: f64 },
    #[error("root finder did not converge at x = {x} (residual {residual:e})")]
    RootFinding { x: f64, residual: f64 },
    #[error("quadrature did not converge: last estimates {coarse} and {fine}")]
    Quadrature { coarse: f64, fine: f64 },
    #[error("dominant eigenvalue {eigenvalue} is not 1 within {tolerance:e}")]
    Model { eigenvalue: f64, tolerance: f64 },
    #[error("eigenvalue 1 is not simple: second modulus {second_modulus}")]
    NoGap { second_modulus: f64 },
    #[error("ill-conditioned linear solve (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("truncation: tail mass {tail:e} exceeds {threshold:e}; try n_max >= {suggested}")]
    Truncation { tail: f64, threshold: f64, suggested: usize },
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Hypothesis,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Index { .. } | Error::Unsupported(_) => ErrorClass::Input,
            Error::Hypothesis { .. } => ErrorClass::Hypothesis,
            _ => ErrorClass::Numerical,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;
