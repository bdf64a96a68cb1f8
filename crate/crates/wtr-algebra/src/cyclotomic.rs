//! The field Q(w), where w is a primitive cube root of unity.
//!
//! Elements are stored as a + b*w with rational a, b, reduced by the
//! minimal polynomial w^2 = -1 - w. This is the natural coefficient field
//! for the hexagonal lattice, whose branch-point data lives in Q(w).

use crate::complex::ApComplex;
use crate::field::{AbelianGroup, Field, Ring};
use crate::AlgebraError;
use std::fmt;

/// Element a + b*w of Q(w), with w^2 + w + 1 = 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycOmega {
    pub a: rug::Rational,
    pub b: rug::Rational,
}

impl CycOmega {
    pub fn new(a: rug::Rational, b: rug::Rational) -> Self {
        CycOmega { a, b }
    }

    pub fn from_rat(a: rug::Rational) -> Self {
        CycOmega {
            a,
            b: rug::Rational::new(),
        }
    }

    pub fn from_i64_pair(a: i64, b: i64) -> Self {
        CycOmega {
            a: rug::Rational::from(a),
            b: rug::Rational::from(b),
        }
    }

    /// The generator w itself.
    pub fn omega() -> Self {
        CycOmega::from_i64_pair(0, 1)
    }

    /// Is this element a plain rational (no w component)?
    pub fn is_rational(&self) -> bool {
        self.b.cmp0() == std::cmp::Ordering::Equal
    }

    /// Galois conjugate w -> w^2, i.e. a + b*w |-> (a - b) - b*w.
    pub fn conj(&self) -> Self {
        CycOmega {
            a: rug::Rational::from(&self.a - &self.b),
            b: rug::Rational::from(-&self.b),
        }
    }

    /// Field norm a^2 - a*b + b^2, the product with the conjugate.
    pub fn norm(&self) -> rug::Rational {
        let aa = rug::Rational::from(&self.a * &self.a);
        let ab = rug::Rational::from(&self.a * &self.b);
        let bb = rug::Rational::from(&self.b * &self.b);
        aa - ab + bb
    }

    /// Numerical embedding with w = exp(2*pi*i/3) = (-1 + i*sqrt(3))/2.
    pub fn embed(&self, digits: u32) -> ApComplex {
        let bits = crate::complex::digits_to_bits(digits);
        let half = rug::Rational::from((1, 2));
        let re_rat = rug::Rational::from(&self.a - rug::Rational::from(&self.b * &half));
        let re = rug::Float::with_val(bits, re_rat);
        let sqrt3 = rug::Float::with_val(bits, 3).sqrt();
        let im = rug::Float::with_val(bits, &self.b) * sqrt3 / 2u32;
        ApComplex::from_parts(re, rug::Float::with_val(bits, im)).with_trusted(digits)
    }
}

impl AbelianGroup for CycOmega {
    fn zero() -> Self {
        CycOmega::from_i64_pair(0, 0)
    }
    fn is_zero(&self) -> bool {
        self.a.cmp0() == std::cmp::Ordering::Equal && self.b.cmp0() == std::cmp::Ordering::Equal
    }
    fn add(&self, rhs: &Self) -> Self {
        CycOmega {
            a: rug::Rational::from(&self.a + &rhs.a),
            b: rug::Rational::from(&self.b + &rhs.b),
        }
    }
    fn neg(&self) -> Self {
        CycOmega {
            a: rug::Rational::from(-&self.a),
            b: rug::Rational::from(-&self.b),
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        CycOmega {
            a: rug::Rational::from(&self.a - &rhs.a),
            b: rug::Rational::from(&self.b - &rhs.b),
        }
    }
    fn mul_i64(&self, n: i64) -> Self {
        CycOmega {
            a: rug::Rational::from(&self.a * n),
            b: rug::Rational::from(&self.b * n),
        }
    }
}

impl Ring for CycOmega {
    fn one() -> Self {
        CycOmega::from_i64_pair(1, 0)
    }

    /// (a + b*w)(c + d*w) = (ac - bd) + (ad + bc - bd) w after reducing w^2.
    fn mul(&self, rhs: &Self) -> Self {
        let ac = rug::Rational::from(&self.a * &rhs.a);
        let bd = rug::Rational::from(&self.b * &rhs.b);
        let ad = rug::Rational::from(&self.a * &rhs.b);
        let bc = rug::Rational::from(&self.b * &rhs.a);
        CycOmega {
            a: ac - &bd,
            b: ad + bc - bd,
        }
    }

    fn from_i64(n: i64) -> Self {
        CycOmega::from_i64_pair(n, 0)
    }
}

impl Field for CycOmega {
    fn inv(&self) -> Result<Self, AlgebraError> {
        if AbelianGroup::is_zero(self) {
            return Err(AlgebraError::DivisionByZero);
        }
        let n = self.norm();
        let ninv = rug::Rational::from(n.recip_ref());
        let c = self.conj();
        Ok(CycOmega {
            a: c.a * &ninv,
            b: c.b * ninv,
        })
    }
}

impl fmt::Display for CycOmega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.cmp0() == std::cmp::Ordering::Equal {
            return write!(f, "{}", self.a);
        }
        let wpart = if self.b == rug::Rational::from(1) {
            "w".to_string()
        } else if self.b == rug::Rational::from(-1) {
            "-w".to_string()
        } else {
            format!("{}*w", self.b)
        };
        if self.a.cmp0() == std::cmp::Ordering::Equal {
            write!(f, "{wpart}")
        } else if wpart.starts_with('-') {
            write!(f, "{}-{}", self.a, &wpart[1..])
        } else {
            write!(f, "{}+{}", self.a, wpart)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_satisfies_minimal_polynomial() {
        let w = CycOmega::omega();
        let w2 = w.mul(&w);
        let sum = w2.add(&w).add(&CycOmega::one());
        assert!(AbelianGroup::is_zero(&sum));
        let w3 = w2.mul(&w);
        assert_eq!(w3, CycOmega::one());
    }

    #[test]
    fn inverse_and_norm() {
        let x = CycOmega::from_i64_pair(3, -5);
        let xi = x.inv().unwrap();
        assert_eq!(x.mul(&xi), CycOmega::one());
        assert_eq!(x.norm(), rug::Rational::from(9 + 15 + 25));
    }

    #[test]
    fn conjugate_fixes_rationals_and_squares_omega() {
        let w = CycOmega::omega();
        assert_eq!(w.conj(), w.mul(&w));
        let r = CycOmega::from_rat(rug::Rational::from((7, 3)));
        assert_eq!(r.conj(), r);
    }

    #[test]
    fn embedding_is_a_cube_root_of_unity() {
        let w = CycOmega::omega().embed(40);
        let w3 = w.mul(&w).mul(&w);
        let one = ApComplex::from_i64_pair(1, 0);
        assert!(w3.sub(&one).abs_f64() < 1e-35);
        // real part is exactly -1/2
        assert!((w.re_f64() + 0.5).abs() < 1e-15);
        assert!(w.im_f64() > 0.8);
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(CycOmega::from_i64_pair(2, 3).to_string(), "2+3*w");
        assert_eq!(CycOmega::from_i64_pair(2, -1).to_string(), "2-w");
        assert_eq!(CycOmega::from_i64_pair(0, -4).to_string(), "-4*w");
        assert_eq!(CycOmega::from_i64_pair(-5, 0).to_string(), "-5");
        let half_w = CycOmega::new(rug::Rational::new(), rug::Rational::from((1, 2)));
        assert_eq!(half_w.to_string(), "1/2*w");
    }
}
