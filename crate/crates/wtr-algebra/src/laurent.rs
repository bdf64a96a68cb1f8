//! Truncated Laurent series with explicit truncation-order tracking.
//!
//! A series stores coefficients for exponents `min_exp .. trunc` and
//! represents a function known modulo O(t^trunc). Arithmetic propagates
//! truncation orders honestly: a product of series known to orders T1, T2
//! with leading exponents m1, m2 is known only to min(T1 + m2, T2 + m1).
//! Asking for a coefficient at or beyond the truncation order is a
//! programming error and panics rather than silently returning zero.
//!
//! Each series is tagged with its expansion point; combining series
//! expanded at different points panics, catching a class of bookkeeping
//! mistakes that would otherwise produce silently wrong residues.

use crate::field::{AbelianGroup, Field, Ring};
use crate::AlgebraError;
use std::fmt;

/// Expansion point tag. `Marked` identifies caller-managed numeric points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesPoint {
    Origin,
    HalfPeriod(u8),
    Marked(u32),
}

impl fmt::Display for SeriesPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesPoint::Origin => write!(f, "0"),
            SeriesPoint::HalfPeriod(k) => write!(f, "hp{k}"),
            SeriesPoint::Marked(id) => write!(f, "pt{id}"),
        }
    }
}

/// Laurent series sum_{e >= min_exp} c_e t^e + O(t^trunc).
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<C: AbelianGroup> {
    point: SeriesPoint,
    min_exp: i64,
    coeffs: Vec<C>,
    trunc: i64,
}

impl<C: AbelianGroup> LaurentSeries<C> {
    /// The zero series, known to order O(t^trunc).
    pub fn zero(point: SeriesPoint, trunc: i64) -> Self {
        LaurentSeries {
            point,
            min_exp: trunc,
            coeffs: vec![],
            trunc,
        }
    }

    /// Build from explicit coefficients starting at `min_exp`. Coefficients
    /// at exponents >= trunc are discarded; leading and trailing zeros are
    /// trimmed.
    pub fn from_coeffs(point: SeriesPoint, min_exp: i64, coeffs: Vec<C>, trunc: i64) -> Self {
        let mut s = LaurentSeries {
            point,
            min_exp,
            coeffs,
            trunc,
        };
        s.normalize();
        s
    }

    pub fn monomial(point: SeriesPoint, exp: i64, c: C, trunc: i64) -> Self {
        LaurentSeries::from_coeffs(point, exp, vec![c], trunc)
    }

    fn normalize(&mut self) {
        let keep = (self.trunc - self.min_exp).max(0) as usize;
        self.coeffs.truncate(keep);
        while self.coeffs.first().is_some_and(|c| c.is_zero()) {
            self.coeffs.remove(0);
            self.min_exp += 1;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.min_exp = self.trunc;
        }
    }

    pub fn point(&self) -> SeriesPoint {
        self.point
    }

    /// Order of the lowest stored nonzero term; equals `trunc` for the zero
    /// series.
    pub fn ord(&self) -> i64 {
        self.min_exp
    }

    pub fn trunc_order(&self) -> i64 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn assert_same_point(&self, rhs: &Self, op: &str) {
        assert!(
            self.point == rhs.point,
            "{op} of series at different points: {} vs {}",
            self.point,
            rhs.point
        );
    }

    /// Coefficient of t^exp. Panics if the coefficient is not determined at
    /// this truncation order.
    pub fn coeff(&self, exp: i64) -> C {
        assert!(
            exp < self.trunc,
            "coefficient at t^{exp} is beyond truncation order O(t^{})",
            self.trunc
        );
        self.coeff_opt(exp).unwrap_or_else(C::zero)
    }

    fn coeff_opt(&self, exp: i64) -> Option<C> {
        if exp < self.min_exp {
            return None;
        }
        let idx = (exp - self.min_exp) as usize;
        self.coeffs.get(idx).cloned()
    }

    pub fn coeff_checked(&self, exp: i64) -> Result<C, AlgebraError> {
        if exp >= self.trunc {
            return Err(AlgebraError::BeyondTruncation {
                exp,
                trunc: self.trunc,
            });
        }
        Ok(self.coeff_opt(exp).unwrap_or_else(C::zero))
    }

    /// Iterate stored (exponent, coefficient) pairs, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &C)> {
        let base = self.min_exp;
        self.coeffs.iter().enumerate().map(move |(i, c)| (base + i as i64, c))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.assert_same_point(rhs, "addition");
        let trunc = self.trunc.min(rhs.trunc);
        if self.is_zero() && rhs.is_zero() {
            return LaurentSeries::zero(self.point, trunc);
        }
        let lo = self.min_exp.min(rhs.min_exp);
        let hi = trunc;
        let mut out = Vec::with_capacity((hi - lo).max(0) as usize);
        for e in lo..hi {
            let a = self.coeff_opt(e).unwrap_or_else(C::zero);
            let b = rhs.coeff_opt(e).unwrap_or_else(C::zero);
            out.push(a.add(&b));
        }
        LaurentSeries::from_coeffs(self.point, lo, out, trunc)
    }

    pub fn neg(&self) -> Self {
        LaurentSeries {
            point: self.point,
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            trunc: self.trunc,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    /// Multiply every coefficient by a machine integer.
    pub fn scale_i64(&self, n: i64) -> Self {
        if n == 0 {
            return LaurentSeries::zero(self.point, self.trunc);
        }
        LaurentSeries {
            point: self.point,
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|c| c.mul_i64(n)).collect(),
            trunc: self.trunc,
        }
    }

    /// Substitute t -> -t.
    pub fn negate_arg(&self) -> Self {
        let coeffs = self
            .iter()
            .map(|(e, c)| if e.rem_euclid(2) == 1 { c.neg() } else { c.clone() })
            .collect();
        LaurentSeries {
            point: self.point,
            min_exp: self.min_exp,
            coeffs,
            trunc: self.trunc,
        }
    }

    /// True when all stored odd-exponent coefficients vanish.
    pub fn is_even_in_arg(&self) -> bool {
        self.iter().all(|(e, c)| e.rem_euclid(2) == 0 || c.is_zero())
    }

    /// Termwise derivative d/dt.
    pub fn derivative(&self) -> Self {
        let coeffs = self.iter().map(|(e, c)| c.mul_i64(e)).collect();
        LaurentSeries::from_coeffs(self.point, self.min_exp - 1, coeffs, self.trunc - 1)
    }

    /// Coefficient of t^-1, the residue of the associated differential.
    pub fn residue(&self) -> C {
        self.coeff(-1)
    }

    /// Drop knowledge beyond O(t^new_trunc).
    pub fn truncate_to(&self, new_trunc: i64) -> Self {
        let mut s = self.clone();
        s.trunc = s.trunc.min(new_trunc);
        s.normalize();
        s
    }

    /// Retag the expansion point without touching coefficients.
    pub fn with_point(mut self, point: SeriesPoint) -> Self {
        self.point = point;
        self
    }

    /// Terms with exponent < 0, truncation order capped at 0.
    pub fn principal_part(&self) -> Self {
        let coeffs = self
            .iter()
            .filter(|(e, _)| *e < 0)
            .map(|(_, c)| c.clone())
            .collect();
        LaurentSeries::from_coeffs(self.point, self.min_exp.min(0), coeffs, self.trunc.min(0))
    }

    pub fn map<D: AbelianGroup>(&self, f: impl Fn(&C) -> D) -> LaurentSeries<D> {
        LaurentSeries::from_coeffs(
            self.point,
            self.min_exp,
            self.coeffs.iter().map(f).collect(),
            self.trunc,
        )
    }
}

impl<C: Ring> LaurentSeries<C> {
    pub fn one(point: SeriesPoint, trunc: i64) -> Self {
        LaurentSeries::monomial(point, 0, C::one(), trunc)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.assert_same_point(rhs, "multiplication");
        mul_with(self, rhs, |a, b| a.mul(b))
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut s = LaurentSeries {
            point: self.point,
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|c| c.mul(k)).collect(),
            trunc: self.trunc,
        };
        s.normalize();
        s
    }

    /// Evaluate at a point (sums the stored terms; the truncation tail is
    /// the caller's error budget). Negative exponents require `x` nonzero.
    pub fn eval(&self, x: &C) -> Result<C, AlgebraError>
    where
        C: Field,
    {
        let mut acc = C::zero();
        for (_, c) in self.iter().collect::<Vec<_>>().into_iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc = acc.mul(&x.powi(self.min_exp)?);
        Ok(acc)
    }
}

impl<C: Field> LaurentSeries<C> {
    pub fn scale_ratio(&self, num: i64, den: i64) -> Self {
        self.scale(&C::from_ratio(num, den))
    }

    /// Substitute t -> k*t for nonzero k (coefficient c_e picks up k^e).
    pub fn scale_arg(&self, k: &C) -> Result<Self, AlgebraError> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (e, c) in self.iter() {
            out.push(c.mul(&k.powi(e)?));
        }
        Ok(LaurentSeries::from_coeffs(
            self.point,
            self.min_exp,
            out,
            self.trunc,
        ))
    }

    /// Multiplicative inverse. The result of inverting c_m t^m (1 + u) is
    /// known to order trunc - 2m.
    pub fn inv(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let m = self.min_exp;
        let lead = self.coeffs[0].clone();
        let lead_inv = lead.inv()?;
        let out_trunc = self.trunc - 2 * m;
        let n = (self.trunc - m).max(0) as usize;
        // recurrence for 1 / (sum a_j t^j), a_0 = lead, normalized exponents
        let mut inv_coeffs: Vec<C> = Vec::with_capacity(n);
        inv_coeffs.push(lead_inv.clone());
        for k in 1..n {
            let mut s = C::zero();
            for j in 1..=k {
                let aj = self.coeff_opt(m + j as i64).unwrap_or_else(C::zero);
                if aj.is_zero() {
                    continue;
                }
                s = s.add(&aj.mul(&inv_coeffs[k - j]));
            }
            inv_coeffs.push(s.neg().mul(&lead_inv));
        }
        Ok(LaurentSeries::from_coeffs(
            self.point,
            -m,
            inv_coeffs,
            out_trunc,
        ))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul(&rhs.inv()?))
    }

    /// Termwise antiderivative with integration constant zero. Fails if a
    /// t^-1 term is present.
    pub fn integrate(&self) -> Result<Self, AlgebraError> {
        let res = self.coeff_opt(-1);
        if res.as_ref().is_some_and(|c| !c.is_zero()) {
            return Err(AlgebraError::ResidueObstruction);
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (e, c) in self.iter() {
            if e == -1 {
                out.push(C::zero());
            } else {
                out.push(c.div(&C::from_i64(e + 1))?);
            }
        }
        Ok(LaurentSeries::from_coeffs(
            self.point,
            self.min_exp + 1,
            out,
            self.trunc + 1,
        ))
    }
}

/// Convolution of series with distinct coefficient types, combined by `f`.
/// Used for products where one factor carries symbolic spectator data.
pub fn mul_with<A, B, C>(
    a: &LaurentSeries<A>,
    b: &LaurentSeries<B>,
    f: impl Fn(&A, &B) -> C,
) -> LaurentSeries<C>
where
    A: AbelianGroup,
    B: AbelianGroup,
    C: AbelianGroup,
{
    assert!(
        a.point == b.point,
        "multiplication of series at different points: {} vs {}",
        a.point,
        b.point
    );
    let trunc = (a.trunc + b.min_exp).min(b.trunc + a.min_exp);
    if a.is_zero() || b.is_zero() {
        return LaurentSeries::zero(a.point, trunc);
    }
    let lo = a.min_exp + b.min_exp;
    let n = (trunc - lo).max(0) as usize;
    let mut out: Vec<C> = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(C::zero());
    }
    for (ea, ca) in a.iter() {
        if ca.is_zero() {
            continue;
        }
        for (eb, cb) in b.iter() {
            let e = ea + eb;
            if e >= trunc {
                break;
            }
            if cb.is_zero() {
                continue;
            }
            let idx = (e - lo) as usize;
            out[idx] = out[idx].add(&f(ca, cb));
        }
    }
    LaurentSeries::from_coeffs(a.point, lo, out, trunc)
}

impl<C: AbelianGroup + fmt::Display> fmt::Display for LaurentSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O(t^{})", self.trunc);
        }
        let mut first = true;
        for (e, c) in self.iter() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*t")?,
                _ => write!(f, "({c})*t^{e}")?,
            }
        }
        write!(f, " + O(t^{})", self.trunc)
    }
}
