//! Rational functions in a formal constant g over Q(w).
//!
//! The hexagonal-lattice computations keep one transcendental constant (the
//! weight-two lattice sum, which has no closed form in Q(w)) symbolic. All
//! exact curve data then lives in the field Q(w)(g). Elements are kept
//! reduced: numerator and denominator coprime, denominator monic, so
//! structural equality is semantic equality.

use crate::cyclotomic::CycOmega;
use crate::field::{AbelianGroup, Field, Ring};
use crate::{AlgebraError, ApComplex};
use std::fmt;

/// Upper bound on polynomial degree; exceeding it means reduction stopped
/// working and results would grow without bound.
const DEGREE_BOUND: usize = 240;

/// Dense polynomial in g with coefficients in Q(w). No trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaPoly {
    coeffs: Vec<CycOmega>,
}

impl GammaPoly {
    pub fn new(mut coeffs: Vec<CycOmega>) -> Self {
        while coeffs.last().is_some_and(AbelianGroup::is_zero) {
            coeffs.pop();
        }
        GammaPoly { coeffs }
    }

    pub fn zero() -> Self {
        GammaPoly { coeffs: vec![] }
    }

    pub fn constant(c: CycOmega) -> Self {
        GammaPoly::new(vec![c])
    }

    pub fn gen() -> Self {
        GammaPoly::new(vec![CycOmega::zero(), CycOmega::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> CycOmega {
        self.coeffs.get(k).cloned().unwrap_or_else(CycOmega::zero)
    }

    pub fn coeffs(&self) -> &[CycOmega] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&CycOmega> {
        self.coeffs.last()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k).add(&rhs.coeff(k)));
        }
        GammaPoly::new(out)
    }

    pub fn neg(&self) -> Self {
        GammaPoly {
            coeffs: self.coeffs.iter().map(AbelianGroup::neg).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return GammaPoly::zero();
        }
        let mut out = vec![CycOmega::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if AbelianGroup::is_zero(a) {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        GammaPoly::new(out)
    }

    pub fn scale(&self, c: &CycOmega) -> Self {
        GammaPoly::new(self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    /// Euclidean division: self = q * d + r with deg r < deg d.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.degree().unwrap();
        let lead_inv = d.leading().unwrap().inv().expect("leading term nonzero");
        let mut rem = self.coeffs.clone();
        let mut quo = vec![CycOmega::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let factor = rem.last().unwrap().mul(&lead_inv);
            if !AbelianGroup::is_zero(&factor) {
                for (j, c) in d.coeffs.iter().enumerate() {
                    let t = factor.mul(c);
                    rem[k + j] = rem[k + j].sub(&t);
                }
                quo[k] = factor;
            }
            rem.pop();
            while rem.last().is_some_and(AbelianGroup::is_zero) {
                rem.pop();
            }
        }
        (GammaPoly::new(quo), GammaPoly::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Self, b: &Self) -> Self {
        let mut x = a.clone();
        let mut y = b.clone();
        while !y.is_zero() {
            let (_, r) = x.divrem(&y);
            x = y;
            y = r;
        }
        x.make_monic()
    }

    fn make_monic(&self) -> Self {
        match self.leading() {
            None => GammaPoly::zero(),
            Some(l) => self.scale(&l.inv().expect("leading term nonzero")),
        }
    }

    pub fn eval(&self, g: &ApComplex, digits: u32) -> ApComplex {
        let mut acc = ApComplex::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(g).add(&c.embed(digits));
        }
        acc
    }
}

impl fmt::Display for GammaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if AbelianGroup::is_zero(c) {
                continue;
            }
            let cs = c.to_string();
            let needs_parens = cs.contains('+') || (cs.contains('-') && !cs.starts_with('-'));
            let coeff_str = if needs_parens { format!("({cs})") } else { cs };
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (k, coeff_str.as_str()) {
                (0, _) => write!(f, "{coeff_str}")?,
                (1, "1") => write!(f, "g")?,
                (1, "-1") => write!(f, "-g")?,
                (1, _) => write!(f, "{coeff_str}*g")?,
                (_, "1") => write!(f, "g^{k}")?,
                (_, "-1") => write!(f, "-g^{k}")?,
                (_, _) => write!(f, "{coeff_str}*g^{k}")?,
            }
        }
        Ok(())
    }
}

/// Reduced fraction of polynomials in g.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaField {
    num: GammaPoly,
    den: GammaPoly,
}

impl GammaField {
    pub fn make(num: GammaPoly, den: GammaPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(GammaField {
                num: GammaPoly::zero(),
                den: GammaPoly::constant(CycOmega::one()),
            });
        }
        let g = GammaPoly::gcd(&num, &den);
        let (num, r1) = num.divrem(&g);
        debug_assert!(r1.is_zero());
        let (den, r2) = den.divrem(&g);
        debug_assert!(r2.is_zero());
        let lead_inv = den.leading().unwrap().inv()?;
        let num = num.scale(&lead_inv);
        let den = den.scale(&lead_inv);
        let deg = num.degree().unwrap_or(0).max(den.degree().unwrap_or(0));
        if deg > DEGREE_BOUND {
            return Err(AlgebraError::DegreeOverflow(deg));
        }
        Ok(GammaField { num, den })
    }

    pub fn from_poly(p: GammaPoly) -> Self {
        GammaField {
            num: p,
            den: GammaPoly::constant(CycOmega::one()),
        }
    }

    pub fn from_cyc(c: CycOmega) -> Self {
        GammaField::from_poly(GammaPoly::constant(c))
    }

    pub fn from_rat(r: rug::Rational) -> Self {
        GammaField::from_cyc(CycOmega::from_rat(r))
    }

    /// The formal constant g itself.
    pub fn gen() -> Self {
        GammaField::from_poly(GammaPoly::gen())
    }

    pub fn num(&self) -> &GammaPoly {
        &self.num
    }

    pub fn den(&self) -> &GammaPoly {
        &self.den
    }

    pub fn is_constant(&self) -> bool {
        self.num.degree().unwrap_or(0) == 0 && self.den.degree().unwrap_or(0) == 0
    }

    /// Substitute a numeric value for g.
    pub fn eval(&self, g: &ApComplex, digits: u32) -> Result<ApComplex, AlgebraError> {
        let n = self.num.eval(g, digits);
        let d = self.den.eval(g, digits);
        n.div(&d)
    }
}

impl AbelianGroup for GammaField {
    fn zero() -> Self {
        GammaField::from_poly(GammaPoly::zero())
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn add(&self, rhs: &Self) -> Self {
        let num = self
            .num
            .mul(&rhs.den)
            .add(&rhs.num.mul(&self.den));
        let den = self.den.mul(&rhs.den);
        GammaField::make(num, den).expect("denominators nonzero")
    }

    fn neg(&self) -> Self {
        GammaField {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    fn mul_i64(&self, n: i64) -> Self {
        GammaField {
            num: self.num.scale(&CycOmega::from_i64(n)),
            den: self.den.clone(),
        }
    }
}

impl Ring for GammaField {
    fn one() -> Self {
        GammaField::from_cyc(CycOmega::one())
    }

    fn mul(&self, rhs: &Self) -> Self {
        GammaField::make(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
            .expect("denominators nonzero")
    }

    fn from_i64(n: i64) -> Self {
        GammaField::from_cyc(CycOmega::from_i64(n))
    }
}

impl Field for GammaField {
    fn inv(&self) -> Result<Self, AlgebraError> {
        if AbelianGroup::is_zero(self) {
            return Err(AlgebraError::DivisionByZero);
        }
        GammaField::make(self.den.clone(), self.num.clone())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "from_ratio with zero denominator");
        GammaField::from_rat(rug::Rational::from((num, den)))
    }
}

impl fmt::Display for GammaField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den_is_one = self.den.degree() == Some(0)
            && self.den.leading() == Some(&CycOmega::one());
        if den_is_one {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
