use thiserror::Error;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("negative exponent at position {pos}")]
    NegativeExponent { pos: usize },
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("the zero polynomial has no Newton diagram")]
    ZeroPolynomial,
    #[error("constant polynomials have no Newton diagram")]
    ConstantPolynomial,
    #[error("exponent arithmetic overflowed")]
    ExponentOverflow,
    #[error("expected f(0) = 0, found constant term {0}")]
    NonzeroConstant(String),
    #[error("face does not belong to this Newton diagram")]
    ForeignFace,
    #[error("face has no even lattice point")]
    NoEvenPoint,
    #[error("exponent {0} has even total degree")]
    EvenDegree(String),
    #[error("invalid binary witness: {0}")]
    InvalidWitness(String),
    #[error("empty monomial basis")]
    EmptyBasis,
    #[error("polynomial is not homogeneous of even degree")]
    NotEvenForm,
    #[error("no SOS-feasible bound below the cap")]
    BoundCapReached,
    #[error("certificate construction failed: {0}")]
    Certificate(String),
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),
    #[error("no valid KKT multipliers: {0}")]
    NoMultipliers(String),
    #[error("degenerate essential remainder")]
    DegenerateRemainder,
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
