//! Exact tensor calculus for generalized Riemannian spaces and equitorsion
//! almost geodesic mappings of the third type.
//!
//! Every field is a truncated Taylor expansion ([`JetScalar`]) at the origin
//! with rational coefficients, so identities between tensors are checked by
//! exact equality rather than within a floating-point tolerance.

pub mod dsl;
pub mod error;
pub mod geometry;
pub mod invariants;
pub mod jet;
pub mod linalg;
pub mod mapping;
pub mod random;
pub mod report;
pub mod suite;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{christoffel_from_metric, CurvatureParams, DerivKind, Space};


pub use jet::JetScalar;
pub use invariants::{InvariantContext, PairContexts, WStarForm};
pub use mapping::{synthesize_instance, AG3Mapping, MappedPair, MappingKind};
pub use linalg::{generic_rank, rank_exact, ParamMatrix, ParamPoly, RationalMatrix};

pub use report::VerificationReport;
pub use tensor::{TensorField, Variance};

/// Exact rational number, always in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

/// `num/den` as a [`Rational`].
///
/// # Panics
///
/// Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
