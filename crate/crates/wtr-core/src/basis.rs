//! Reduction of elliptic functions to the P₂ pole basis.
//!
//! An elliptic function whose poles lie in a known finite set is written as
//!
//! ```text
//!   f(z) = c₀ + Σ_j c_j · P₂^{(m_j)}(z − p_j),
//! ```
//!
//! which makes both periods immediate: every P₂ derivative has vanishing
//! A-period, so ∮_A f = c₀·s with s the A-period of the lattice, while on
//! the B-cycle only the underived P₂ terms contribute their quasi-period,
//! ∮_B f = c₀·sτ + (2πi/s)·Σ_{m_j=0} c_j.
//!
//! [`reduce_to_basis`] performs the decomposition numerically from local
//! Laurent data, [`primitive_from_zero`] integrates a reduced expression in
//! closed form, and the quadrature routines provide independent contour
//! integrals for cross-checks.

use crate::elliptic::{NumericCurve, PKind};
use crate::{CoreError, Result};
use wtr_algebra::{AbelianGroup, ApComplex, Field, LaurentSeries, Ring};

/// A point where an expression is allowed to have poles.
#[derive(Clone, Debug)]
pub enum PolePoint {
    /// Half period ω_a, a ∈ {1,2,3}, of the working lattice.
    Half(u8),
    /// An explicit point of the working lattice coordinates.
    Marked(ApComplex),
}

impl PolePoint {
    pub fn location(&self, curve: &NumericCurve) -> ApComplex {
        match self {
            PolePoint::Half(a) => curve.half_period(*a),
            PolePoint::Marked(c) => c.clone(),
        }
    }
}

/// One basis term c · P₂^{(m)}(z − pole).
#[derive(Clone, Debug)]
pub struct ExprTerm {
    pub pole: PolePoint,
    pub m: u32,
    pub coeff: ApComplex,
}

/// c₀ + Σ terms, an elliptic function in the P₂ pole basis.
#[derive(Clone, Debug)]
pub struct EllipticExpr {
    pub c0: ApComplex,
    pub terms: Vec<ExprTerm>,
}

/// Distance from z to the nearest point of w + s(ℤ+τℤ).
pub fn lattice_dist(curve: &NumericCurve, z: &ApComplex, w: &ApComplex) -> f64 {
    let s = &curve.scale;
    let d = z.sub(w).div(s).expect("lattice scale is nonzero");
    let (red, _) = curve.ctx.strip_reduce(&d);
    let mut best = f64::INFINITY;
    for k in -1..=1i64 {
        for l in -1..=1i64 {
            let shift = ApComplex::from_i64_pair(k, 0).add(&curve.ctx.tau().mul_i64(l));
            let r = red.sub(&shift).abs_f64();
            if r < best {
                best = r;
            }
        }
    }
    best * s.abs_f64()
}

impl EllipticExpr {
    pub fn constant(c: ApComplex) -> Self {
        EllipticExpr {
            c0: c,
            terms: Vec::new(),
        }
    }

    /// Add a term, merging with an existing one at the same pole (mod the
    /// lattice) and derivative order.
    pub fn push_term(&mut self, curve: &NumericCurve, term: ExprTerm) {
        let loc = term.pole.location(curve);
        let merge_tol = 1e-10 * curve.scale.abs_f64().max(1.0);
        for t in &mut self.terms {
            if t.m == term.m && lattice_dist(curve, &t.pole.location(curve), &loc) < merge_tol {
                t.coeff = t.coeff.add(&term.coeff);
                return;
            }
        }
        self.terms.push(term);
    }

    pub fn add(&self, curve: &NumericCurve, other: &EllipticExpr) -> EllipticExpr {
        let mut out = self.clone();
        out.c0 = out.c0.add(&other.c0);
        for t in &other.terms {
            out.push_term(curve, t.clone());
        }
        out
    }

    pub fn scale(&self, c: &ApComplex) -> EllipticExpr {
        EllipticExpr {
            c0: self.c0.mul(c),
            terms: self
                .terms
                .iter()
                .map(|t| ExprTerm {
                    pole: t.pole.clone(),
                    m: t.m,
                    coeff: t.coeff.mul(c),
                })
                .collect(),
        }
    }

    pub fn neg(&self) -> EllipticExpr {
        self.scale(&ApComplex::from_i64_pair(-1, 0))
    }

    /// Σ of the coefficients of the underived P₂ terms, the only ones with a
    /// B-period.
    pub fn p2_weight(&self) -> ApComplex {
        let mut m0 = ApComplex::zero();
        for t in &self.terms {
            if t.m == 0 {
                m0 = m0.add(&t.coeff);
            }
        }
        m0
    }
}

/// Evaluate an expression at a point of the working lattice.
pub fn expr_eval(curve: &NumericCurve, expr: &EllipticExpr, z: &ApComplex) -> Result<ApComplex> {
    let mut acc = expr.c0.clone();
    for t in &expr.terms {
        let arg = z.sub(&t.pole.location(curve));
        let v = curve.p_eval(PKind::P2m(t.m), &arg)?;
        acc = acc.add(&t.coeff.mul(&v));
    }
    Ok(acc)
}

/// Derivative in z: each P₂^{(m)} becomes P₂^{(m+1)}, the constant drops.
pub fn expr_diff(expr: &EllipticExpr) -> EllipticExpr {
    EllipticExpr {
        c0: ApComplex::zero(),
        terms: expr
            .terms
            .iter()
            .map(|t| ExprTerm {
                pole: t.pole.clone(),
                m: t.m + 1,
                coeff: t.coeff.clone(),
            })
            .collect(),
    }
}

/// ∮_A f dz = c₀ · s.
pub fn a_period(curve: &NumericCurve, expr: &EllipticExpr) -> ApComplex {
    expr.c0.mul(&curve.scale)
}

/// ∮_B f dz = c₀ · sτ + (2πi/s) · Σ_{m=0} c_j.
pub fn b_period(curve: &NumericCurve, expr: &EllipticExpr) -> Result<ApComplex> {
    let (_, btau) = curve.periods();
    let jump = ApComplex::two_pi_i(curve.digits() + 15)
        .div(&curve.scale)
        .map_err(CoreError::Algebra)?;
    Ok(expr.c0.mul(&btau).add(&jump.mul(&expr.p2_weight())))
}

/// Decompose an elliptic function into the P₂ pole basis.
///
/// `poles` lists every point (mod the lattice) where f may be singular.
/// `expand` must return the Laurent expansion of f in the local variable
/// t = z − p_i around pole i, correct from its leading order through t⁰.
/// `eval` evaluates f at an ordinary point. A surviving simple pole is an
/// error: it would make the function non-elliptic against its own periods.
pub fn reduce_to_basis(
    curve: &NumericCurve,
    poles: &[PolePoint],
    expand: &dyn Fn(usize) -> Result<LaurentSeries<ApComplex>>,
    eval: &dyn Fn(&ApComplex) -> Result<ApComplex>,
) -> Result<EllipticExpr> {
    let digits = curve.digits();
    let residue_tol = 10f64.powf(-0.6 * digits as f64);
    let mut out = EllipticExpr::constant(ApComplex::zero());

    for (i, pole) in poles.iter().enumerate() {
        let series = expand(i)?;
        if series.ord() >= 0 {
            continue;
        }
        let res = series.coeff(-1);
        if res.abs_f64() > residue_tol {
            return Err(CoreError::SimplePole {
                pole: format!("{:?}", pole.location(curve)),
                residue: format!("{:.6e} + {:.6e} i", res.re_f64(), res.im_f64()),
            });
        }
        for k in 2..=(-series.ord()) {
            let a = series.coeff(-k);
            if a.abs_f64() == 0.0 {
                continue;
            }
            // a·t^{-k} matches a·(−1)^k/(k−1)! · P₂^{(k−2)}(t).
            let mut fact: i64 = 1;
            for j in 2..k {
                fact *= j;
            }
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let coeff = a.mul_i64(sign).div_i64(fact);
            out.push_term(
                curve,
                ExprTerm {
                    pole: pole.clone(),
                    m: (k - 2) as u32,
                    coeff,
                },
            );
        }
    }

    // The constant is fixed by evaluation at a generic point, chosen as far
    // from every pole as the candidate list allows; a second point
    // cross-checks that nothing outside the basis survived.
    let tau = curve.ctx.tau().clone();
    let s = curve.scale.clone();
    let candidates = [
        ApComplex::one().add(&tau).div_i64(5),
        ApComplex::one().add(&tau).div_i64(3),
        ApComplex::from_i64_pair(2, 0).add(&tau).div_i64(7),
        ApComplex::one().add(&tau.mul_i64(2)).div_i64(7),
    ];
    let mut scored: Vec<(f64, ApComplex)> = candidates
        .iter()
        .map(|c| {
            let z = c.mul(&s);
            let mut dist = f64::INFINITY;
            for p in poles {
                dist = dist.min(lattice_dist(curve, &z, &p.location(curve)));
            }
            (dist, z)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite distances"));
    if scored[0].0 < 1e-3 * s.abs_f64() {
        return Err(CoreError::Domain(
            "no generic evaluation point clear of the pole set".into(),
        ));
    }

    let c0_at = |z: &ApComplex| -> Result<ApComplex> {
        let principal = expr_eval(curve, &out, z)?;
        Ok(eval(z)?.sub(&principal))
    };
    let c0a = c0_at(&scored[0].1)?;
    let c0b = c0_at(&scored[1].1)?;
    let check_tol = 10f64.powf(-0.6 * digits as f64) * (1.0 + c0a.abs_f64());
    if c0a.sub(&c0b).abs_f64() > check_tol {
        return Err(CoreError::Domain(format!(
            "reduction remainder is not constant: {:.3e} vs {:.3e}",
            c0a.abs_f64(),
            c0b.abs_f64()
        )));
    }
    out.c0 = c0a;
    Ok(out)
}

/// ∫₀^z f, with f in the pole basis: the constant integrates to c₀z, each
/// P₂(·−p) to P₁(·−p), and each P₂^{(m)} with m ≥ 1 to P₂^{(m−1)}; the
/// integration constant pins the value 0 at z = 0. Well defined on ℂ since
/// every residue of f vanishes.
#[derive(Clone, Debug)]
pub struct QuasiEllipticPrimitive {
    pub linear: ApComplex,
    /// (pole location, coefficient) entries c·P₁(z−p).
    pub p1_terms: Vec<(ApComplex, ApComplex)>,
    /// (pole location, order, coefficient) entries c·P₂^{(m)}(z−p).
    pub elliptic: Vec<(ApComplex, u32, ApComplex)>,
    pub constant: ApComplex,
}

impl QuasiEllipticPrimitive {
    pub fn eval(&self, curve: &NumericCurve, z: &ApComplex) -> Result<ApComplex> {
        let mut acc = self.constant.add(&self.linear.mul(z));
        for (p, c) in &self.p1_terms {
            acc = acc.add(&c.mul(&curve.p_eval(PKind::P1, &z.sub(p))?));
        }
        for (p, m, c) in &self.elliptic {
            acc = acc.add(&c.mul(&curve.p_eval(PKind::P2m(*m), &z.sub(p))?));
        }
        Ok(acc)
    }
}

pub fn primitive_from_zero(
    curve: &NumericCurve,
    expr: &EllipticExpr,
) -> Result<QuasiEllipticPrimitive> {
    let zero = ApComplex::zero();
    let mut prim = QuasiEllipticPrimitive {
        linear: expr.c0.clone(),
        p1_terms: Vec::new(),
        elliptic: Vec::new(),
        constant: ApComplex::zero(),
    };
    for t in &expr.terms {
        let loc = t.pole.location(curve);
        if lattice_dist(curve, &zero, &loc) < 1e-10 * curve.scale.abs_f64().max(1.0) {
            return Err(CoreError::Domain(
                "primitive base point lies on a pole of the integrand".into(),
            ));
        }
        if t.m == 0 {
            prim.p1_terms.push((loc, t.coeff.clone()));
        } else {
            prim.elliptic.push((loc, t.m - 1, t.coeff.clone()));
        }
    }
    let at_zero = prim.eval(curve, &zero)?;
    prim.constant = at_zero.neg();
    Ok(prim)
}

/// Trapezoidal A-cycle integral ∮ f dz along z = s(t + iε), t ∈ [0,1),
/// with ε = min(Im τ, 1)/7, doubling the point count until two passes agree.
pub fn a_quadrature(
    curve: &NumericCurve,
    f: &dyn Fn(&ApComplex) -> Result<ApComplex>,
    tol: f64,
) -> Result<ApComplex> {
    let eps = curve.ctx.tau().im_f64().min(1.0) / 7.0;
    let base = ApComplex::from_f64_pair(0.0, eps);
    let dir = ApComplex::one();
    contour_quadrature(curve, f, &base, &dir, tol)
}

/// Trapezoidal B-cycle integral along z = s(1/3 + τt), t ∈ [0,1).
pub fn b_quadrature(
    curve: &NumericCurve,
    f: &dyn Fn(&ApComplex) -> Result<ApComplex>,
    tol: f64,
) -> Result<ApComplex> {
    let base = ApComplex::from_ratio(1, 3);
    let dir = curve.ctx.tau().clone();
    contour_quadrature(curve, f, &base, &dir, tol)
}

/// Periodic trapezoid along z = s(base + dir·t), t ∈ [0,1). Geometric
/// convergence requires f to take equal values at the two endpoints, which
/// holds for any elliptic integrand.
fn contour_quadrature(
    curve: &NumericCurve,
    f: &dyn Fn(&ApComplex) -> Result<ApComplex>,
    base: &ApComplex,
    dir: &ApComplex,
    tol: f64,
) -> Result<ApComplex> {
    let s = &curve.scale;
    let step_dir = dir.mul(s);
    let mut n: usize = 16;
    let mut prev: Option<ApComplex> = None;
    loop {
        let mut acc = ApComplex::zero();
        for j in 0..n {
            // Nodes must be placed at working precision; a node rounded at
            // the storage width of small integers shifts the converged sum.
            let t = ApComplex::from_rat(&wtr_algebra::Rat::from((j as i64, n as i64)));
            let z = base.add(&dir.mul(&t)).mul(s);
            acc = acc.add(&f(&z)?);
        }
        let integral = acc.mul(&step_dir).div_i64(n as i64);
        if let Some(p) = prev {
            if integral.sub(&p).abs_f64() < tol {
                return Ok(integral);
            }
        }
        prev = Some(integral);
        n *= 2;
        if n > (1 << 17) {
            return Err(CoreError::Domain(
                "contour quadrature failed to converge".into(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{curve_constants, wp_taylor_at, wp_zero_coefficients};
    use wtr_algebra::{Lcg64, SeriesPoint};

    fn test_curve() -> NumericCurve {
        NumericCurve::general(ApComplex::from_f64_pair(0.3, 1.2), 40).unwrap()
    }

    /// Laurent series of P₂^{(m)}(t) at its pole, to the given truncation.
    fn p2m_series_at_own_pole(
        curve: &NumericCurve,
        m: u32,
        trunc: i64,
    ) -> LaurentSeries<ApComplex> {
        let d = curve_constants(&curve.ctx).unwrap();
        let mut s = crate::elliptic::wp_expand_at_zero(&d.g2, &d.g3, trunc + m as i64);
        s = s.add(&LaurentSeries::monomial(
            SeriesPoint::Origin,
            0,
            d.big_g2.clone(),
            trunc + m as i64,
        ));
        for _ in 0..m {
            s = s.derivative();
        }
        s.truncate_to(trunc)
    }

    /// Taylor series of P₂^{(m)}(t + c) for c off the lattice.
    fn p2m_series_regular(
        curve: &NumericCurve,
        m: u32,
        c: &ApComplex,
        trunc: i64,
    ) -> LaurentSeries<ApComplex> {
        let d = curve_constants(&curve.ctx).unwrap();
        let p0 = curve.p_eval(PKind::Wp, c).unwrap();
        let p1 = curve.p_eval(PKind::WpPrime, c).unwrap();
        let mut s = wp_taylor_at(SeriesPoint::Origin, &p0, &p1, &d.g2, trunc + m as i64 + 2);
        s = s.add(&LaurentSeries::monomial(
            SeriesPoint::Origin,
            0,
            d.big_g2.clone(),
            trunc + m as i64 + 2,
        ));
        for _ in 0..m {
            s = s.derivative();
        }
        s.truncate_to(trunc)
    }

    /// Expansion of a whole EllipticExpr around poles[i].
    fn expand_expr(
        curve: &NumericCurve,
        expr: &EllipticExpr,
        poles: &[PolePoint],
        i: usize,
        trunc: i64,
    ) -> LaurentSeries<ApComplex> {
        let at = poles[i].location(curve);
        let mut acc = LaurentSeries::monomial(SeriesPoint::Origin, 0, expr.c0.clone(), trunc);
        for t in &expr.terms {
            let sep = at.sub(&t.pole.location(curve));
            let part = if lattice_dist(curve, &at, &t.pole.location(curve)) < 1e-9 {
                p2m_series_at_own_pole(curve, t.m, trunc)
            } else {
                p2m_series_regular(curve, t.m, &sep, trunc)
            };
            acc = acc.add(&part.scale(&t.coeff));
        }
        acc
    }

    fn sample_expr(curve: &NumericCurve) -> (EllipticExpr, Vec<PolePoint>) {
        let marked = ApComplex::from_f64_pair(0.21, 0.44);
        let poles = vec![
            PolePoint::Half(1),
            PolePoint::Half(2),
            PolePoint::Half(3),
            PolePoint::Marked(marked),
        ];
        let mut expr = EllipticExpr::constant(ApComplex::from_f64_pair(0.7, -0.2));
        let coeffs = [
            (0usize, 0u32, ApComplex::from_i64_pair(3, 1)),
            (0, 3, ApComplex::from_f64_pair(-0.5, 0.25)),
            (1, 1, ApComplex::from_i64_pair(2, -2)),
            (2, 0, ApComplex::from_f64_pair(0.1, 1.3)),
            (3, 2, ApComplex::from_i64_pair(-1, 4)),
            (3, 0, ApComplex::from_f64_pair(2.4, 0.0)),
        ];
        for (pi, m, c) in coeffs {
            expr.push_term(
                curve,
                ExprTerm {
                    pole: poles[pi].clone(),
                    m,
                    coeff: c,
                },
            );
        }
        (expr, poles)
    }

    #[test]
    fn reduce_recovers_a_known_expression() {
        let curve = test_curve();
        let (expr, poles) = sample_expr(&curve);
        let expand =
            |i: usize| -> crate::Result<_> { Ok(expand_expr(&curve, &expr, &poles, i, 1)) };
        let eval = |z: &ApComplex| expr_eval(&curve, &expr, z);
        let got = reduce_to_basis(&curve, &poles, &expand, &eval).unwrap();

        assert!(got.c0.sub(&expr.c0).abs_f64() < 1e-28);
        assert_eq!(got.terms.len(), expr.terms.len());
        for want in &expr.terms {
            let mut found = false;
            for have in &got.terms {
                if have.m == want.m
                    && lattice_dist(
                        &curve,
                        &have.pole.location(&curve),
                        &want.pole.location(&curve),
                    ) < 1e-9
                {
                    assert!(have.coeff.sub(&want.coeff).abs_f64() < 1e-28);
                    found = true;
                }
            }
            assert!(found, "missing term of order {}", want.m);
        }
    }

    #[test]
    fn periods_match_quadrature() {
        let curve = test_curve();
        let (expr, _) = sample_expr(&curve);
        let f = |z: &ApComplex| expr_eval(&curve, &expr, z);
        let a_num = a_quadrature(&curve, &f, 1e-30).unwrap();
        let b_num = b_quadrature(&curve, &f, 1e-30).unwrap();
        let a_cf = a_period(&curve, &expr);
        let b_cf = b_period(&curve, &expr).unwrap();
        assert!(a_cf.sub(&a_num).abs_f64() < 1e-27);
        assert!(b_cf.sub(&b_num).abs_f64() < 1e-27);
    }

    #[test]
    fn primitive_reproduces_integrand_and_periods() {
        let curve = test_curve();
        let (expr, _) = sample_expr(&curve);
        let prim = primitive_from_zero(&curve, &expr).unwrap();

        let zero = ApComplex::zero();
        assert!(prim.eval(&curve, &zero).unwrap().abs_f64() < 1e-32);

        // Quasi-periods of the primitive are exactly the contour integrals.
        let z = ApComplex::from_f64_pair(0.11, 0.52);
        let v = prim.eval(&curve, &z).unwrap();
        let (pa, pb) = curve.periods();
        let va = prim.eval(&curve, &z.add(&pa)).unwrap();
        let vb = prim.eval(&curve, &z.add(&pb)).unwrap();
        assert!(va.sub(&v).sub(&a_period(&curve, &expr)).abs_f64() < 1e-32);
        assert!(
            vb.sub(&v)
                .sub(&b_period(&curve, &expr).unwrap())
                .abs_f64()
                < 1e-32
        );

        // Difference quotient of the primitive against the integrand.
        let h = 1e-10;
        let dplus = prim.eval(&curve, &z.add(&ApComplex::from_f64_pair(h, 0.0))).unwrap();
        let dminus = prim
            .eval(&curve, &z.sub(&ApComplex::from_f64_pair(h, 0.0)))
            .unwrap();
        let deriv = dplus.sub(&dminus).div_i64(2).scale_float(
            &rug::Float::with_val(64, 1.0 / h),
        );
        let direct = expr_eval(&curve, &expr, &z).unwrap();
        assert!(deriv.sub(&direct).abs_f64() < 1e-6);
    }

    #[test]
    fn surviving_simple_pole_is_rejected() {
        // d/dz log(℘ − e₁) has simple poles at ω₁ and 0.
        let curve = test_curve();
        let d = curve_constants(&curve.ctx).unwrap();
        let g2 = d.g2.clone();
        let e1 = d.e[0].clone();
        let poles = vec![PolePoint::Half(1), PolePoint::Marked(ApComplex::zero())];
        let trunc = 4i64;
        let expand = |i: usize| -> crate::Result<LaurentSeries<ApComplex>> {
            let (num, den) = match i {
                0 => {
                    // ℘′ and ℘ − e₁ at ω₁.
                    let p = wp_taylor_at(
                        SeriesPoint::Origin,
                        &e1,
                        &ApComplex::zero(),
                        &g2,
                        trunc + 4,
                    );
                    (
                        p.derivative(),
                        p.sub(&LaurentSeries::monomial(
                            SeriesPoint::Origin,
                            0,
                            e1.clone(),
                            trunc + 4,
                        )),
                    )
                }
                _ => {
                    let p = crate::elliptic::wp_expand_at_zero(&g2, &d.g3, trunc + 4);
                    (
                        p.derivative(),
                        p.sub(&LaurentSeries::monomial(
                            SeriesPoint::Origin,
                            0,
                            e1.clone(),
                            trunc + 4,
                        )),
                    )
                }
            };
            num.div(&den).map_err(CoreError::Algebra)
        };
        let eval = |z: &ApComplex| -> crate::Result<ApComplex> {
            let p = curve.p_eval(PKind::Wp, z)?;
            let dp = curve.p_eval(PKind::WpPrime, z)?;
            dp.div(&p.sub(&e1)).map_err(CoreError::Algebra)
        };
        match reduce_to_basis(&curve, &poles, &expand, &eval) {
            Err(CoreError::SimplePole { .. }) => {}
            other => panic!("expected a simple pole error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn reduction_on_the_rescaled_lattice() {
        // ℘′(u)² on the equianharmonic lattice: poles only at u = 0 with
        // ℘′² = 4℘³ − g₂℘ − g₃, so the basis form follows from the ℘ powers:
        // ordering by pole strength, ℘′² = (1/30)P₂⁗ − (2/5)g₂P₂ + const.
        let curve = NumericCurve::special(40).unwrap();
        let d = &curve.data;
        let poles = vec![PolePoint::Marked(ApComplex::zero())];
        let trunc = 2i64;
        let g2 = d.g2.clone();
        let g3 = d.g3.clone();
        let expand = |_i: usize| -> crate::Result<LaurentSeries<ApComplex>> {
            let p = crate::elliptic::wp_expand_at_zero(&g2, &g3, trunc + 8);
            Ok(p.derivative().mul(&p.derivative()).truncate_to(trunc))
        };
        let eval = |z: &ApComplex| -> crate::Result<ApComplex> {
            let dp = curve.p_eval(PKind::WpPrime, z)?;
            Ok(dp.mul(&dp))
        };
        let got = reduce_to_basis(&curve, &poles, &expand, &eval).unwrap();

        // Principal part: (1/30)P₂⁽⁴⁾; with g₂ vanishing here the P₂ term
        // can only appear at numerical-noise size.
        let mut main = None;
        for t in &got.terms {
            if t.coeff.abs_f64() > 1e-40 {
                assert!(main.is_none(), "unexpected second large term");
                main = Some(t);
            }
        }
        let main = main.expect("principal term present");
        assert_eq!(main.m, 4);
        assert!(
            main.coeff.sub(&ApComplex::from_ratio(1, 30)).abs_f64() < 1e-25,
            "got {:?}",
            main.coeff
        );
        // Constant: ℘′² − (1/30)P₂⁽⁴⁾ at a generic point, cross-checked by
        // the A-period quadrature ∮℘′² = a_period.
        let f = |z: &ApComplex| eval(z);
        let quad = a_quadrature(&curve, &f, 1e-25).unwrap();
        let cf = a_period(&curve, &got);
        assert!(quad.sub(&cf).abs_f64() < 1e-22);

        // Coefficients from wp_zero_coefficients confirm the constant term:
        // ℘′² = 4℘³ − g₃ has z⁰ coefficient 4·(3c₂) + ... against the
        // series product; simplest is agreement of eval and expr_eval.
        let z = ApComplex::from_f64_pair(0.27, 0.33);
        let lhs = eval(&z).unwrap();
        let rhs = expr_eval(&curve, &got, &z).unwrap();
        assert!(lhs.sub(&rhs).abs_f64() < 1e-25);
        let _ = wp_zero_coefficients(&d.g2, &d.g3, 2);
    }

    #[test]
    fn random_exprs_roundtrip_periods() {
        let curve = test_curve();
        let mut rng = Lcg64::new(0xbad5_eed);
        for round in 0..4 {
            let marked = ApComplex::from_f64_pair(rng.next_in(0.1, 0.4), rng.next_in(0.3, 0.6));
            let poles = vec![PolePoint::Half(1 + (round % 3) as u8), PolePoint::Marked(marked)];
            let mut expr = EllipticExpr::constant(ApComplex::from_f64_pair(
                rng.next_in(-1.0, 1.0),
                rng.next_in(-1.0, 1.0),
            ));
            for (i, p) in poles.iter().enumerate() {
                let m = (rng.next_u64() % 3) as u32;
                expr.push_term(
                    &curve,
                    ExprTerm {
                        pole: p.clone(),
                        m,
                        coeff: ApComplex::from_f64_pair(
                            rng.next_in(-2.0, 2.0),
                            rng.next_in(-2.0, 2.0),
                        ),
                    },
                );
                let _ = i;
            }
            let f = |z: &ApComplex| expr_eval(&curve, &expr, z);
            let a_num = a_quadrature(&curve, &f, 1e-28).unwrap();
            assert!(a_period(&curve, &expr).sub(&a_num).abs_f64() < 1e-24);
            let b_num = b_quadrature(&curve, &f, 1e-28).unwrap();
            assert!(b_period(&curve, &expr).unwrap().sub(&b_num).abs_f64() < 1e-24);
        }
    }
}
