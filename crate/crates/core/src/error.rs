use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension d = {0}; need d >= 1")]
    InvalidDimension(usize),
    #[error("basis size overflows 64-bit counters for d = {d}, n = {n}")]
    Overflow { d: usize, n: usize },
    #[error("point dimension {found} does not match basis dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected {expected} points, got {found}")]
    PointCount { expected: usize, found: usize },
    #[error("unknown or unsupported shape: {0}")]
    UnknownShape(String),
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("mesh has {size} points but m_n = {needed}")]
    MeshTooSmall { size: usize, needed: usize },
    #[error("weight degenerate on mesh: {positive} points with w > 0, need m_n = {needed}")]
    WeightDegenerate { positive: usize, needed: usize },
    #[error("mesh is not numerically unisolvent for degree-n polynomials ({selected} of {needed} pivots above the relative tolerance)")]
    NotUnisolvent { selected: usize, needed: usize },
    #[error("combinatorial guard exceeded: {count:e} candidates > {limit:e}")]
    GuardExceeded { count: f64, limit: f64 },
    #[error("l_n = 0 at degree n = 0; diameter exponent 1/l_n undefined")]
    ZeroDegree,
    #[error("measure does not determine P_n (singular Gram matrix)")]
    SingularGram,
    #[error("Gram matrix not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),
    #[error("optimal measure not certified after {iterations} iterations: max B_n/m_n = {ratio}")]
    NotConverged { iterations: usize, ratio: f64 },
    #[error("no reference equilibrium measure for {0}")]
    MissingReference(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("operation requires d = 1, got d = {0}")]
    RequiresUnivariate(usize),
    #[error("circle quadrature unresolved: doubling nodes changed the energy by {0:e}")]
    QuadratureUnresolved(f64),
    #[error("degree n = {n}: {error}")]
    AtDegree { n: usize, error: Box<Error> },
}

impl Error {
    pub(crate) fn at_degree(n: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtDegree { n, error: Box::new(e) }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
