//! Newton-polyhedron based local nonnegativity analysis and exact SOS
//! certificates for real polynomials.

pub mod bconv;
pub mod cert;
pub mod checkers;
pub mod constrained;
pub mod error;
pub mod linalg;
pub mod mora;
pub mod newton;
pub mod poly;
pub mod sos;

pub use error::{Error, Result};
pub use poly::{Exponent, Polynomial, Rational, VarNames, WeightVector};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/diagrams.md")]
    mod diagrams {}
    #[doc = include_str!("../../../book/src/bisection.md")]
    mod bisection {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/conditions.md")]
    mod conditions {}
    #[doc = include_str!("../../../book/src/division.md")]
    mod division {}
    #[doc = include_str!("../../../book/src/constrained.md")]
    mod constrained {}
}
