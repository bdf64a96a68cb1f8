//! Rational reconstruction from floating-point values.
//!
//! Runs the continued-fraction expansion of a high-precision float and
//! returns the first convergent that reproduces the input within the given
//! tolerance, provided its denominator stays under the bound. Used to lift
//! numerically fitted coefficients back to exact rationals.

use rug::{Float, Integer, Rational};

/// Attempt to recognize `x` as a rational with denominator at most
/// `den_bound`, accurate to `tol`. Returns None when no convergent of the
/// continued fraction gets close enough before the bound is exceeded.
pub fn recognize_rational(x: &Float, den_bound: u64, tol: &Float) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let prec = x.prec();
    let bound = Integer::from(den_bound);

    // convergents p_k / q_k of the continued fraction of x
    let mut p_prev = Integer::from(1);
    let mut q_prev = Integer::from(0);
    let mut p = Integer::from(x.to_integer_round(rug::float::Round::Down)?.0);
    let mut q = Integer::from(1);
    let mut frac = Float::with_val(prec, x - Float::with_val(prec, &p));

    for _ in 0..200 {
        let cand = Rational::from((p.clone(), q.clone()));
        let err = Float::with_val(prec, x - Float::with_val(prec, &cand)).abs();
        if err < *tol && q <= bound {
            return Some(cand);
        }
        if q > bound {
            return None;
        }
        if frac.is_zero() {
            return None;
        }
        let inv = Float::with_val(prec, frac.recip_ref());
        let a = inv.to_integer_round(rug::float::Round::Down)?.0;
        frac = Float::with_val(prec, &inv - Float::with_val(prec, &a));
        let p_next = Integer::from(&a * &p) + &p_prev;
        let q_next = Integer::from(&a * &q) + &q_prev;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn float_of(r: &Rational, prec: u32) -> Float {
        Float::with_val(prec, r)
    }

    #[test]
    fn recovers_simple_fractions() {
        let prec = 200;
        let tol = Float::with_val(prec, 1e-40);
        for &(n, d) in &[(1i64, 576i64), (1, 12), (1, 6912), (355, 113), (-7, 3)] {
            let r = Rational::from((n, d));
            let x = float_of(&r, prec);
            assert_eq!(recognize_rational(&x, 1_000_000, &tol), Some(r));
        }
    }

    #[test]
    fn recovers_zero() {
        let prec = 200;
        let tol = Float::with_val(prec, 1e-40);
        let x = Float::with_val(prec, 0);
        assert_eq!(
            recognize_rational(&x, 10, &tol),
            Some(Rational::new())
        );
    }

    #[test]
    fn rejects_values_needing_large_denominators() {
        let prec = 200;
        let tol = Float::with_val(prec, 1e-45);
        // pi is not a fraction with denominator under a million at 1e-45
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        assert_eq!(recognize_rational(&pi, 1_000_000, &tol), None);
    }

    #[test]
    fn respects_small_perturbations_within_tolerance() {
        let prec = 200;
        let tol = Float::with_val(prec, 1e-25);
        let r = Rational::from((1, 576));
        let mut x = float_of(&r, prec);
        x += Float::with_val(prec, 1e-30);
        assert_eq!(recognize_rational(&x, 1_000_000, &tol), Some(r));
    }
}
