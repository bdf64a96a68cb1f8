//! Scalar domains and truncated Laurent series for the recursion engine.
//!
//! Four coefficient domains share one set of algebraic traits: exact
//! rationals, the cyclotomic field Q(w) with w a primitive cube root of
//! unity, rational functions in a formal constant g over Q(w), and
//! arbitrary-precision complex numbers. Laurent series are generic over
//! the coefficient domain and track their truncation order explicitly,
//! so every arithmetic operation knows how many coefficients of the
//! result are actually meaningful.

pub mod complex;
pub mod cyclotomic;
pub mod field;
pub mod gamma;
pub mod laurent;
pub mod lcg;
pub mod reconstruct;

pub use complex::{digits_to_bits, ensure_working_digits, ApComplex};
pub use cyclotomic::CycOmega;
pub use field::{AbelianGroup, Field, Ring};
pub use gamma::{GammaField, GammaPoly};
pub use laurent::{mul_with, LaurentSeries, SeriesPoint};
pub use lcg::Lcg64;
pub use reconstruct::recognize_rational;
pub use rug::Rational as Rat;

/// Errors produced by scalar and series arithmetic.
#[derive(Debug, Clone, thiserror::Error)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("series has a t^-1 term, no single-valued primitive exists")]
    ResidueObstruction,
    #[error("coefficient at exponent {exp} lies beyond truncation order {trunc}")]
    BeyondTruncation { exp: i64, trunc: i64 },
    #[error("cannot parse {0:?} as a number")]
    Parse(String),
    #[error("rational function degree {0} exceeds safety bound, likely a reduction bug")]
    DegreeOverflow(usize),
    #[error("{0}")]
    Domain(String),
}
