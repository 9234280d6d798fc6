use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cycle must have at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("coupling coefficient must be nonzero")]
    ZeroCoupling,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("point has a zero coordinate at index {0}; Laurent terms are undefined")]
    ZeroCoordinate(usize),
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i64),
    #[error("exact result is not integral")]
    NonInteger,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("invalid facet: {0}")]
    InvalidFacet(String),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("root finder did not converge after {iterations} iterations (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("instance is not generic enough: {0}")]
    GenericityFailure(String),
    #[error("genericity failure persisted after {attempts} resamples: {last}")]
    ResamplesExhausted { attempts: usize, last: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
