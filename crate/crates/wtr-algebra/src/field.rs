//! Algebraic traits shared by all scalar domains.
//!
//! The series code is generic over these traits rather than over concrete
//! types, so the same recursion kernels run over exact cyclotomic scalars
//! and over floating complex numbers. `AbelianGroup` is deliberately
//! minimal: symbolic coefficient containers that cannot be multiplied
//! pointwise (products of expressions in different variables) still
//! implement it and get series addition and differentiation for free.

use crate::AlgebraError;
use std::cmp::Ordering;
use std::fmt::Debug;

/// Additive group operations.
pub trait AbelianGroup: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }
    /// Scale by a machine integer, as in exponent factors of d/dt.
    fn mul_i64(&self, n: i64) -> Self;
}

/// Commutative ring with identity.
pub trait Ring: AbelianGroup {
    fn one() -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn from_i64(n: i64) -> Self;
}

/// Ring in which every nonzero element is invertible.
pub trait Field: Ring {
    fn inv(&self) -> Result<Self, AlgebraError>;

    fn div(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul(&rhs.inv()?))
    }

    /// The element num/den. Panics on a zero denominator, which is a
    /// programming error at every call site.
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "from_ratio with zero denominator");
        Self::from_i64(num)
            .div(&Self::from_i64(den))
            .expect("denominator checked nonzero")
    }

    /// Integer power with binary exponentiation; negative exponents invert.
    fn powi(&self, n: i64) -> Result<Self, AlgebraError> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }
}

impl AbelianGroup for rug::Rational {
    fn zero() -> Self {
        rug::Rational::new()
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == Ordering::Equal
    }
    fn add(&self, rhs: &Self) -> Self {
        rug::Rational::from(self + rhs)
    }
    fn neg(&self) -> Self {
        rug::Rational::from(-self)
    }
    fn sub(&self, rhs: &Self) -> Self {
        rug::Rational::from(self - rhs)
    }
    fn mul_i64(&self, n: i64) -> Self {
        rug::Rational::from(self * n)
    }
}

impl Ring for rug::Rational {
    fn one() -> Self {
        rug::Rational::from(1)
    }
    fn mul(&self, rhs: &Self) -> Self {
        rug::Rational::from(self * rhs)
    }
    fn from_i64(n: i64) -> Self {
        rug::Rational::from(n)
    }
}

impl Field for rug::Rational {
    fn inv(&self) -> Result<Self, AlgebraError> {
        if self.cmp0() == Ordering::Equal {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(rug::Rational::from(self.recip_ref()))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "from_ratio with zero denominator");
        rug::Rational::from((num, den))
    }
}
