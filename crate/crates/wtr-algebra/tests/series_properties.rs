//! Property tests for the scalar domains and Laurent series arithmetic.

use proptest::prelude::*;
use rug::Rational;
use wtr_algebra::{AbelianGroup, CycOmega, Field, LaurentSeries, Ring, SeriesPoint};

fn rat_strategy() -> impl Strategy<Value = Rational> {
    (-40i64..40, 1i64..12).prop_map(|(n, d)| Rational::from((n, d)))
}

fn cyc_strategy() -> impl Strategy<Value = CycOmega> {
    (rat_strategy(), rat_strategy()).prop_map(|(a, b)| CycOmega::new(a, b))
}

#[derive(Debug, Clone)]
struct SeriesSpec {
    min_exp: i64,
    coeffs: Vec<Rational>,
    slack: i64,
}

fn series_strategy() -> impl Strategy<Value = LaurentSeries<Rational>> {
    (
        -4i64..4,
        prop::collection::vec(rat_strategy(), 1..8),
        0i64..3,
    )
        .prop_map(|(min_exp, coeffs, slack)| SeriesSpec {
            min_exp,
            coeffs,
            slack,
        })
        .prop_map(|s| {
            let trunc = s.min_exp + s.coeffs.len() as i64 + s.slack;
            LaurentSeries::from_coeffs(SeriesPoint::Origin, s.min_exp, s.coeffs, trunc)
        })
}

/// Nonzero series whose leading coefficient is invertible.
fn nonzero_series_strategy() -> impl Strategy<Value = LaurentSeries<Rational>> {
    series_strategy().prop_filter("nonzero", |s| !s.is_zero())
}

fn assert_agree(a: &LaurentSeries<Rational>, b: &LaurentSeries<Rational>) {
    let t = a.trunc_order().min(b.trunc_order());
    let lo = a.ord().min(b.ord());
    for e in lo..t {
        assert_eq!(a.coeff(e), b.coeff(e), "coefficient of t^{e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn addition_commutes(f in series_strategy(), g in series_strategy()) {
        assert_agree(&f.add(&g), &g.add(&f));
    }

    #[test]
    fn multiplication_commutes(f in series_strategy(), g in series_strategy()) {
        assert_agree(&f.mul(&g), &g.mul(&f));
    }

    #[test]
    fn multiplication_associates(
        f in series_strategy(),
        g in series_strategy(),
        h in series_strategy(),
    ) {
        assert_agree(&f.mul(&g).mul(&h), &f.mul(&g.mul(&h)));
    }

    #[test]
    fn multiplication_distributes(
        f in series_strategy(),
        g in series_strategy(),
        h in series_strategy(),
    ) {
        assert_agree(&f.mul(&g.add(&h)), &f.mul(&g).add(&f.mul(&h)));
    }

    #[test]
    fn inverse_multiplies_to_one(f in nonzero_series_strategy()) {
        let fi = f.inv().unwrap();
        let p = f.mul(&fi);
        let one = LaurentSeries::monomial(
            SeriesPoint::Origin, 0, Rational::from(1), p.trunc_order());
        assert_agree(&p, &one);
    }

    #[test]
    fn product_truncation_rule(f in series_strategy(), g in series_strategy()) {
        let p = f.mul(&g);
        let expect = (f.trunc_order() + g.ord()).min(g.trunc_order() + f.ord());
        prop_assert_eq!(p.trunc_order(), expect);
    }

    #[test]
    fn leibniz_rule(f in series_strategy(), g in series_strategy()) {
        let lhs = f.mul(&g).derivative();
        let rhs = f.derivative().mul(&g).add(&f.mul(&g.derivative()));
        assert_agree(&lhs, &rhs);
    }

    #[test]
    fn derivative_has_no_residue(f in series_strategy()) {
        let d = f.derivative();
        if d.trunc_order() > -1 {
            prop_assert!(d.residue().is_zero());
        }
    }

    #[test]
    fn argument_negation_involutes(f in series_strategy()) {
        prop_assert_eq!(f.negate_arg().negate_arg(), f);
    }

    #[test]
    fn argument_negation_respects_products(f in series_strategy(), g in series_strategy()) {
        assert_agree(&f.mul(&g).negate_arg(), &f.negate_arg().mul(&g.negate_arg()));
    }

    #[test]
    fn integrate_inverts_derivative(f in series_strategy()) {
        let back = f.derivative().integrate().unwrap();
        let lo = f.ord().max(back.ord());
        let hi = f.trunc_order().min(back.trunc_order());
        for e in lo..hi {
            if e != 0 {
                prop_assert_eq!(back.coeff(e), f.coeff(e));
            }
        }
    }

    #[test]
    fn cyclotomic_norm_is_multiplicative(x in cyc_strategy(), y in cyc_strategy()) {
        let lhs = x.mul(&y).norm();
        let rhs = x.norm() * y.norm();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cyclotomic_inverse_roundtrip(x in cyc_strategy()) {
        prop_assume!(!AbelianGroup::is_zero(&x));
        prop_assert_eq!(x.mul(&x.inv().unwrap()), CycOmega::one());
    }

    #[test]
    fn cyclotomic_conjugation_is_a_ring_map(x in cyc_strategy(), y in cyc_strategy()) {
        prop_assert_eq!(x.mul(&y).conj(), x.conj().mul(&y.conj()));
        prop_assert_eq!(x.add(&y).conj(), x.conj().add(&y.conj()));
    }

    #[test]
    fn embedding_respects_multiplication(x in cyc_strategy(), y in cyc_strategy()) {
        let digits = 40;
        let lhs = x.mul(&y).embed(digits);
        let rhs = x.embed(digits).mul(&y.embed(digits));
        prop_assert!(lhs.sub(&rhs).abs_f64() < 1e-30);
    }
}
