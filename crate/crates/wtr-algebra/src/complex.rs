//! Arbitrary-precision complex numbers over MPFR floats.
//!
//! Precision is quoted in decimal digits at the API surface and converted
//! to a bit width with guard bits internally. Every value carries a
//! `trusted` digit count: binary operations propagate the minimum of the
//! operands' counts, so a result never claims more accuracy than its most
//! uncertain input. Exact small integers carry `u32::MAX` and therefore
//! never degrade a computation.
//!
//! Arithmetic always allocates the result at the larger of the two operand
//! bit widths; width is capacity, the trusted count is the claim.

use crate::field::{AbelianGroup, Field, Ring};
use crate::AlgebraError;
use rug::float::Constant;
use rug::Float;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

const LOG2_10: f64 = 3.321_928_094_887_362;
const GUARD_BITS: u32 = 32;
const DEFAULT_DIGITS: u32 = 60;

/// Working bit width used for constants whose value is not dyadic, such as
/// `from_ratio(1, 3)`. A process-wide high-water mark: contexts that need
/// more precision raise it once and it never drops, so constants created
/// inside worker threads are always wide enough.
static WORKING_BITS: AtomicU32 = AtomicU32::new(0);

/// Convert a decimal digit count to an MPFR bit width with guard bits.
pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * LOG2_10).ceil() as u32 + GUARD_BITS
}

/// Raise the process-wide working width so plain constants built after this
/// call are accurate to at least `digits` decimal digits.
pub fn ensure_working_digits(digits: u32) {
    WORKING_BITS.fetch_max(digits_to_bits(digits), Ordering::Relaxed);
}

fn working_bits() -> u32 {
    WORKING_BITS
        .load(Ordering::Relaxed)
        .max(digits_to_bits(DEFAULT_DIGITS))
}

/// Complex number with independently stored real and imaginary parts.
#[derive(Clone)]
pub struct ApComplex {
    re: Float,
    im: Float,
    trusted: u32,
}

impl ApComplex {
    pub fn from_parts(re: Float, im: Float) -> Self {
        let trusted = (re.prec().min(im.prec()).saturating_sub(GUARD_BITS) as f64 / LOG2_10)
            .floor() as u32;
        ApComplex { re, im, trusted }
    }

    /// Integer constant, stored at the working width: the value is exact at
    /// any width, and a wide store keeps later products of two constants
    /// from rounding at a narrow join.
    pub fn from_i64_pair(re: i64, im: i64) -> Self {
        let bits = working_bits();
        ApComplex {
            re: Float::with_val(bits, re),
            im: Float::with_val(bits, im),
            trusted: u32::MAX,
        }
    }

    /// Real rational constant at the working width.
    pub fn from_rat(r: &rug::Rational) -> Self {
        let bits = working_bits();
        ApComplex {
            re: Float::with_val(bits, r),
            im: Float::new(bits),
            trusted: u32::MAX,
        }
    }

    /// The exact binary values of two doubles, stored at the working width.
    pub fn from_f64_pair(re: f64, im: f64) -> Self {
        let bits = working_bits();
        ApComplex {
            re: Float::with_val(bits, re),
            im: Float::with_val(bits, im),
            trusted: u32::MAX,
        }
    }

    /// Parse decimal strings at the given precision.
    pub fn parse(re: &str, im: &str, digits: u32) -> Result<Self, AlgebraError> {
        let bits = digits_to_bits(digits);
        let pre = Float::parse(re).map_err(|_| AlgebraError::Parse(re.to_string()))?;
        let pim = Float::parse(im).map_err(|_| AlgebraError::Parse(im.to_string()))?;
        Ok(ApComplex {
            re: Float::with_val(bits, pre),
            im: Float::with_val(bits, pim),
            trusted: digits,
        })
    }

    pub fn pi(digits: u32) -> Self {
        let bits = digits_to_bits(digits);
        ApComplex {
            re: Float::with_val(bits, Constant::Pi),
            im: Float::new(bits),
            trusted: digits,
        }
    }

    /// 2*pi*i at the given precision.
    pub fn two_pi_i(digits: u32) -> Self {
        let bits = digits_to_bits(digits);
        let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
        ApComplex {
            re: Float::new(bits),
            im: two_pi,
            trusted: digits,
        }
    }

    pub fn i() -> Self {
        ApComplex::from_i64_pair(0, 1)
    }

    pub fn with_trusted(mut self, digits: u32) -> Self {
        self.trusted = digits;
        self
    }

    pub fn trusted_digits(&self) -> u32 {
        self.trusted
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn re_f64(&self) -> f64 {
        self.re.to_f64()
    }

    pub fn im_f64(&self) -> f64 {
        self.im.to_f64()
    }

    pub fn bit_width(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    fn join_width(&self, rhs: &Self) -> u32 {
        self.bit_width().max(rhs.bit_width())
    }

    fn join_trusted(&self, rhs: &Self) -> u32 {
        self.trusted.min(rhs.trusted)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        ApComplex {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
            trusted: self.trusted,
        }
    }

    /// Squared modulus as a real float.
    pub fn abs_sq(&self) -> Float {
        let w = self.bit_width();
        Float::with_val(w, &self.re * &self.re) + Float::with_val(w, &self.im * &self.im)
    }

    /// Modulus as a real float.
    pub fn abs(&self) -> Float {
        let mut h = Float::with_val(self.bit_width(), &self.re);
        h.hypot_mut(&self.im);
        h
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    /// Principal argument via atan2.
    pub fn arg(&self) -> Float {
        let mut a = Float::with_val(self.bit_width(), &self.im);
        a.atan2_mut(&self.re);
        a
    }

    pub fn scale_float(&self, f: &Float) -> Self {
        let w = self.bit_width().max(f.prec());
        ApComplex {
            re: Float::with_val(w, &self.re * f),
            im: Float::with_val(w, &self.im * f),
            trusted: self.trusted,
        }
    }

    pub fn div_i64(&self, n: i64) -> Self {
        assert!(n != 0, "division by zero integer");
        let w = self.bit_width();
        ApComplex {
            re: Float::with_val(w, &self.re / n),
            im: Float::with_val(w, &self.im / n),
            trusted: self.trusted,
        }
    }

    /// Complex exponential.
    pub fn exp(&self) -> Self {
        let w = self.bit_width();
        let mut r = Float::with_val(w, &self.re);
        r.exp_mut();
        let mut s = Float::with_val(w, &self.im);
        let mut c = Float::new(w);
        s.sin_cos_mut(&mut c);
        ApComplex {
            re: Float::with_val(w, &r * &c),
            im: r * s,
            trusted: self.trusted,
        }
    }

    /// Principal branch logarithm.
    pub fn ln(&self) -> Result<Self, AlgebraError> {
        if AbelianGroup::is_zero(self) {
            return Err(AlgebraError::DivisionByZero);
        }
        let w = self.bit_width();
        let mut m = self.abs();
        m.ln_mut();
        Ok(ApComplex {
            re: Float::with_val(w, m),
            im: self.arg(),
            trusted: self.trusted,
        })
    }

    /// Principal n-th root through polar form.
    pub fn root(&self, n: u32) -> Result<Self, AlgebraError> {
        assert!(n > 0);
        if AbelianGroup::is_zero(self) {
            return Ok(self.clone());
        }
        let w = self.bit_width();
        let mut r = self.abs();
        r.root_mut(n);
        let theta = self.arg() / n;
        let mut s = Float::with_val(w, &theta);
        let mut c = Float::new(w);
        s.sin_cos_mut(&mut c);
        Ok(ApComplex {
            re: Float::with_val(w, &r * &c),
            im: r * s,
            trusted: self.trusted,
        })
    }

    pub fn sqrt(&self) -> Self {
        self.root(2).expect("root(2) cannot fail")
    }

    /// Decimal strings for the real and imaginary parts, rounded to
    /// `digits` significant digits. Deterministic for identical inputs.
    pub fn to_decimal_strings(&self, digits: usize) -> (String, String) {
        let fmt_part = |f: &Float| -> String {
            if f.is_zero() {
                return "0".to_string();
            }
            format!("{:.*e}", digits.saturating_sub(1), f)
        };
        (fmt_part(&self.re), fmt_part(&self.im))
    }
}

impl PartialEq for ApComplex {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re && self.im == other.im
    }
}

impl fmt::Debug for ApComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal_strings(20);
        write!(f, "({re} {im}i @{}b)", self.bit_width())
    }
}

impl fmt::Display for ApComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal_strings(20);
        if self.im.is_zero() {
            write!(f, "{re}")
        } else {
            write!(f, "{re} + {im}*i")
        }
    }
}

impl AbelianGroup for ApComplex {
    fn zero() -> Self {
        ApComplex::from_i64_pair(0, 0)
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, rhs: &Self) -> Self {
        let w = self.join_width(rhs);
        ApComplex {
            re: Float::with_val(w, &self.re + &rhs.re),
            im: Float::with_val(w, &self.im + &rhs.im),
            trusted: self.join_trusted(rhs),
        }
    }

    fn neg(&self) -> Self {
        ApComplex {
            re: Float::with_val(self.re.prec(), -&self.re),
            im: Float::with_val(self.im.prec(), -&self.im),
            trusted: self.trusted,
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        let w = self.join_width(rhs);
        ApComplex {
            re: Float::with_val(w, &self.re - &rhs.re),
            im: Float::with_val(w, &self.im - &rhs.im),
            trusted: self.join_trusted(rhs),
        }
    }

    fn mul_i64(&self, n: i64) -> Self {
        let w = self.bit_width();
        ApComplex {
            re: Float::with_val(w, &self.re * n),
            im: Float::with_val(w, &self.im * n),
            trusted: self.trusted,
        }
    }
}

impl Ring for ApComplex {
    fn one() -> Self {
        ApComplex::from_i64_pair(1, 0)
    }

    fn mul(&self, rhs: &Self) -> Self {
        let w = self.join_width(rhs);
        let ac = Float::with_val(w, &self.re * &rhs.re);
        let bd = Float::with_val(w, &self.im * &rhs.im);
        let ad = Float::with_val(w, &self.re * &rhs.im);
        let bc = Float::with_val(w, &self.im * &rhs.re);
        ApComplex {
            re: ac - bd,
            im: ad + bc,
            trusted: self.join_trusted(rhs),
        }
    }

    fn from_i64(n: i64) -> Self {
        ApComplex::from_i64_pair(n, 0)
    }
}

impl Field for ApComplex {
    fn inv(&self) -> Result<Self, AlgebraError> {
        if AbelianGroup::is_zero(self) {
            return Err(AlgebraError::DivisionByZero);
        }
        let w = self.bit_width();
        let n = self.abs_sq();
        Ok(ApComplex {
            re: Float::with_val(w, &self.re / &n),
            im: -Float::with_val(w, &self.im / &n),
            trusted: self.trusted,
        })
    }

    fn div(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        if AbelianGroup::is_zero(rhs) {
            return Err(AlgebraError::DivisionByZero);
        }
        let w = self.join_width(rhs);
        let n = rhs.abs_sq();
        let ac = Float::with_val(w, &self.re * &rhs.re);
        let bd = Float::with_val(w, &self.im * &rhs.im);
        let bc = Float::with_val(w, &self.im * &rhs.re);
        let ad = Float::with_val(w, &self.re * &rhs.im);
        Ok(ApComplex {
            re: Float::with_val(w, ac + bd) / &n,
            im: Float::with_val(w, bc - ad) / &n,
            trusted: self.join_trusted(rhs),
        })
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "from_ratio with zero denominator");
        let bits = working_bits();
        ApComplex {
            re: Float::with_val(bits, rug::Rational::from((num, den))),
            im: Float::new(bits),
            trusted: u32::MAX,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &ApComplex, b: &ApComplex, tol: f64) -> bool {
        a.sub(b).abs_f64() < tol
    }

    #[test]
    fn exponential_of_two_pi_i_is_one() {
        let z = ApComplex::two_pi_i(50);
        let e = z.exp();
        assert!(close(&e, &ApComplex::one(), 1e-45));
    }

    #[test]
    fn ln_inverts_exp_on_principal_strip() {
        let z = ApComplex::parse("0.7", "-1.3", 50).unwrap();
        let back = z.exp().ln().unwrap();
        assert!(close(&back, &z, 1e-45));
    }

    #[test]
    fn sixth_root_recovers_value() {
        let z = ApComplex::parse("2.25", "0.5", 50).unwrap();
        let r = z.root(6).unwrap();
        let six = r.powi(6).unwrap();
        assert!(close(&six, &z, 1e-44));
    }

    #[test]
    fn division_is_inverse_of_multiplication() {
        let a = ApComplex::parse("1.5", "-0.25", 50).unwrap();
        let b = ApComplex::parse("-0.75", "2.0", 50).unwrap();
        let q = a.mul(&b).div(&b).unwrap();
        assert!(close(&q, &a, 1e-45));
    }

    #[test]
    fn trusted_digits_take_the_minimum() {
        let a = ApComplex::parse("1.0", "0.0", 80).unwrap();
        let b = ApComplex::parse("2.0", "0.0", 30).unwrap();
        assert_eq!(a.mul(&b).trusted_digits(), 30);
        assert_eq!(a.add(&b).trusted_digits(), 30);
        // exact integers never degrade the claim
        let c = ApComplex::from_i64(7);
        assert_eq!(a.mul(&c).trusted_digits(), 80);
    }

    #[test]
    fn working_width_high_water_mark() {
        ensure_working_digits(90);
        let x: ApComplex = Field::from_ratio(1, 3);
        assert!(x.bit_width() >= digits_to_bits(90));
        let three = x.mul_i64(3);
        assert!(close(&three, &ApComplex::one(), 1e-85));
    }

    #[test]
    fn decimal_strings_are_deterministic() {
        let z = ApComplex::pi(60);
        let (r1, _) = z.to_decimal_strings(40);
        let (r2, _) = ApComplex::pi(60).to_decimal_strings(40);
        assert_eq!(r1, r2);
        assert!(r1.starts_with("3.141592653589793238462643383279502884"));
    }
}
