use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point outside model domain: {0}")]
    Domain(String),
    #[error("tangent vectors live at different base points")]
    BaseMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid time function: {0}")]
    InvalidTimeFunction(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("gradient undefined at this point: {0}")]
    GradientUndefined(String),
    #[error("too few samples: {0}")]
    InsufficientSamples(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::Quadrature(_) | Error::RootFinding(_) | Error::NonConvergence(_)
        )
    }
}
