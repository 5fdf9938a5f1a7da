use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFiniteAt { iteration: usize, what: String },
    #[error("enumeration budget exceeded: {paths} paths > {budget}; use a smaller horizon")]
    EnumerationBudget { paths: f64, budget: f64 },
    #[error("action outside the policy box")]
    ActionOutsideBox,
    #[error("rejection sampler exhausted {0} draws; check the action box and covariance")]
    RejectionBudget(usize),
    #[error("importance weight is not finite (density floor violated)")]
    NonFiniteWeight,
    #[error("empty batch")]
    EmptyBatch,
    #[error("baseline magnitude {value} exceeds declared bound {bound}")]
    BaselineBound { value: f64, bound: f64 },
    #[error("margin nonpositive; the safety step hypothesis is violated")]
    NonPositiveMargin,
    #[error("variance too large for the bound to apply")]
    VarianceTooLarge,
    #[error("state lies inside an obstacle")]
    InsideObstacle,
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
