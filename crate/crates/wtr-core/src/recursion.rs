//! Topological recursion for the invariant correlation functions.
//!
//! Every stable correlation ŵ_{g,n}(z₁,…,z_n) on the torus decomposes into a
//! finite sum of pure products
//!
//! ```text
//!   ŵ_{g,n} = Σ_terms  c · Π_{i=1}^{n} P₂^{(m_i)}(z_i − ω_{a_i}),
//! ```
//!
//! with every pole at a half period, every m even, and maximal pole order
//! 6g−4+2n. Vanishing A-periods in each variable leave no room for additive
//! constants, so the table of such terms is the whole function.
//!
//! [`recursion_step`] produces ŵ_{g,n+1} from lower entries by taking
//! residues at the half periods of
//!
//! ```text
//!   u_a(z; z₀) · R⁽²⁾ŵ(z, −z; 𝐳) / (2℘′(z)²),
//!   u_a(z; z₀) = P₁(z−z₀) − P₁(ω_a−z₀),
//! ```
//!
//! where R⁽²⁾ŵ collects ŵ_{g−1,n+2}(z,−z,𝐳) plus all ordered factorizations
//! without a ŵ₀₁ part. Everything happens on Laurent series in the local
//! variable t = z−ω_a whose coefficients are scalars; the dependence on the
//! spectator variables rides along as symbolic slot factors, so a single
//! generic implementation serves the exact field ℚ(ω)(γ) and floating point
//! alike.

use crate::elliptic::{
    wp_expand_at_halfperiod, wp_expand_at_zero, CurveData, NumericCurve, PKind,
};
use crate::{CoreError, Result};
use std::collections::BTreeMap;
use wtr_algebra::{
    AbelianGroup, ApComplex, Field, GammaField, LaurentSeries, Ring, SeriesPoint,
};

/// Coefficient domains for the recursion: a field with a cheap test for
/// "this value is numerically nothing".
pub trait Scalar: Field {
    fn negligible(&self, tol: f64) -> bool;
    /// Crude size of the value, used to build relative noise thresholds.
    /// Exact scalars report 1 for anything nonzero, so every threshold
    /// built from their magnitudes degrades to an exact-zero test.
    fn magnitude(&self) -> f64;
}

impl Scalar for ApComplex {
    fn negligible(&self, tol: f64) -> bool {
        self.abs_f64() < tol
    }

    fn magnitude(&self) -> f64 {
        self.abs_f64()
    }
}

impl Scalar for GammaField {
    fn negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }
}

/// Largest coefficient magnitude of a series, for relative noise thresholds.
fn series_scale<C: Scalar>(s: &LaurentSeries<C>) -> f64 {
    let mut scale = 0f64;
    for e in s.ord()..s.trunc_order() {
        scale = scale.max(s.coeff(e).magnitude());
    }
    scale
}

/// One factor P₂^{(m)}(z − ω_pole). Pole 0 stands for the origin and may
/// appear only in transient integrand data, never in a stored correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotFactor {
    pub pole: u8,
    pub m: u32,
}

/// c · Π_i P₂^{(m_i)}(z_i − ω_{a_i}), one factor per variable slot.
#[derive(Clone, Debug)]
pub struct MultiTerm<C> {
    pub coeff: C,
    pub factors: Vec<SlotFactor>,
}

/// A correlation function as a sum of pure product terms.
#[derive(Clone, Debug)]
pub struct MultiExpr<C> {
    pub n: usize,
    pub terms: Vec<MultiTerm<C>>,
}

impl<C: Scalar> MultiExpr<C> {
    pub fn new(n: usize) -> Self {
        MultiExpr {
            n,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, term: MultiTerm<C>) {
        assert_eq!(term.factors.len(), self.n, "slot count mismatch");
        for t in &mut self.terms {
            if t.factors == term.factors {
                t.coeff = t.coeff.add(&term.coeff);
                return;
            }
        }
        self.terms.push(term);
    }

    pub fn add(&self, other: &MultiExpr<C>) -> MultiExpr<C> {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone());
        }
        out
    }

    pub fn scale(&self, c: &C) -> MultiExpr<C> {
        MultiExpr {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| MultiTerm {
                    coeff: t.coeff.mul(c),
                    factors: t.factors.clone(),
                })
                .collect(),
        }
    }

    /// Drop terms whose coefficient is nothing.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|t| !t.coeff.negligible(tol));
    }

    /// Largest pole order m+2 across all slot factors.
    pub fn max_pole_order(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|f| f.m + 2))
            .max()
            .unwrap_or(0)
    }

    /// The same expression with two slots swapped.
    pub fn swap_slots(&self, i: usize, j: usize) -> MultiExpr<C> {
        let mut out = MultiExpr::new(self.n);
        for t in &self.terms {
            let mut f = t.factors.clone();
            f.swap(i, j);
            out.push(MultiTerm {
                coeff: t.coeff.clone(),
                factors: f,
            });
        }
        out
    }
}

/// Evaluate a numeric correlation at concrete points.
pub fn w_eval(
    curve: &NumericCurve,
    expr: &MultiExpr<ApComplex>,
    points: &[ApComplex],
) -> Result<ApComplex> {
    assert_eq!(points.len(), expr.n, "need one point per slot");
    let mut acc = ApComplex::zero();
    for t in &expr.terms {
        let mut prod = t.coeff.clone();
        for (i, f) in t.factors.iter().enumerate() {
            assert!(f.pole >= 1 && f.pole <= 3, "stored pole must be a half period");
            let arg = points[i].sub(&curve.half_period(f.pole));
            prod = prod.mul(&curve.p_eval(PKind::P2m(f.m), &arg)?);
        }
        acc = acc.add(&prod);
    }
    Ok(acc)
}

/// The third half-period index: ω_a + ω_b ≡ ω_c and ω_a − ω_b ≡ ω_c for
/// distinct a, b in {1,2,3}; against the origin the index passes through.
fn third(a: u8, b: u8) -> u8 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    if a == b {
        return 0;
    }
    6 - a - b
}

/// Curve data plus the bookkeeping the recursion needs over a scalar type.
pub struct RecursionContext<C: Scalar> {
    pub data: CurveData<C>,
    /// Below this magnitude a numeric coefficient counts as zero; the exact
    /// backend ignores it.
    pub zero_tol: f64,
}

impl RecursionContext<ApComplex> {
    pub fn numeric(curve: &NumericCurve) -> Self {
        RecursionContext {
            data: curve.data.clone(),
            zero_tol: 10f64.powf(-0.6 * curve.digits() as f64),
        }
    }
}

impl RecursionContext<GammaField> {
    pub fn exact_special() -> Self {
        RecursionContext {
            data: crate::elliptic::curve_constants_special_exact(),
            zero_tol: 0.0,
        }
    }
}

impl<C: Scalar> RecursionContext<C> {
    /// Laurent series of P₂^{(m)} in t at its own pole.
    pub(crate) fn p2m_at_origin(&self, m: u32, trunc: i64, point: SeriesPoint) -> LaurentSeries<C> {
        let mut s = wp_expand_at_zero(&self.data.g2, &self.data.g3, trunc + m as i64);
        s = s.add(&LaurentSeries::monomial(
            SeriesPoint::Origin,
            0,
            self.data.big_g2.clone(),
            trunc + m as i64,
        ));
        for _ in 0..m {
            s = s.derivative();
        }
        s.truncate_to(trunc).with_point(point)
    }

    /// Taylor series of P₂^{(m)}(ω_c + t), regular since c is a half period.
    pub(crate) fn p2m_at_half(&self, c: u8, m: u32, trunc: i64, point: SeriesPoint) -> LaurentSeries<C> {
        assert!((1..=3).contains(&c));
        let e_c = self.data.e[c as usize - 1].clone();
        let mut s = wp_expand_at_halfperiod(c, &e_c, &self.data.g2, trunc + m as i64 + 2);
        s = s.add(&LaurentSeries::monomial(
            SeriesPoint::HalfPeriod(c),
            0,
            self.data.big_g2.clone(),
            trunc + m as i64 + 2,
        ));
        for _ in 0..m {
            s = s.derivative();
        }
        s.truncate_to(trunc).with_point(point)
    }

    /// Series in t of the slot factor P₂^{(m)}(z − ω_b) at z = ω_a + t,
    /// where a may be 0 for the origin.
    pub(crate) fn slot_series(&self, a: u8, b: u8, m: u32, trunc: i64, point: SeriesPoint) -> LaurentSeries<C> {
        if a == b {
            self.p2m_at_origin(m, trunc, point)
        } else {
            self.p2m_at_half(third(a, b), m, trunc, point)
        }
    }

    /// 1/(2℘′(ω_a+t)²) as a series, a = 0 giving 1/(2℘′(t)²).
    pub(crate) fn inv_two_wp_prime_sq(&self, a: u8, trunc: i64, point: SeriesPoint) -> LaurentSeries<C> {
        let pad = trunc + 10;
        let wp = if a == 0 {
            wp_expand_at_zero(&self.data.g2, &self.data.g3, pad).with_point(point)
        } else {
            let e_a = self.data.e[a as usize - 1].clone();
            wp_expand_at_halfperiod(a, &e_a, &self.data.g2, pad).with_point(point)
        };
        let dp = wp.derivative();
        let sq = dp.mul(&dp).scale(&C::from_i64(2));
        sq.inv().expect("wp prime squared is invertible").truncate_to(trunc)
    }
}

/// The table of computed correlations, keyed by (g, n).
pub struct CorrelationTable<C: Scalar> {
    entries: BTreeMap<(u32, u32), MultiExpr<C>>,
    pub level: u32,
}

impl<C: Scalar> CorrelationTable<C> {
    pub fn new() -> Self {
        CorrelationTable {
            entries: BTreeMap::new(),
            level: 0,
        }
    }

    pub fn get(&self, g: u32, n: u32) -> Result<&MultiExpr<C>> {
        self.entries
            .get(&(g, n))
            .ok_or(CoreError::MissingCorrelation(g, n))
    }

    pub fn insert(&mut self, g: u32, n: u32, expr: MultiExpr<C>) {
        self.entries.insert((g, n), expr);
    }

    pub fn keys(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries.keys().copied()
    }
}

impl<C: Scalar> Default for CorrelationTable<C> {
    fn default() -> Self {
        Self::new()
    }
}

/// One additive piece of the integrand at a fixed ramification point:
/// a scalar Laurent series in t times a product of symbolic factors on the
/// spectator slots.
pub struct IntegrandGroup<C: AbelianGroup> {
    pub series: LaurentSeries<C>,
    /// (spectator slot index, factor) sorted by slot; each slot appears once.
    pub spectators: Vec<(usize, SlotFactor)>,
}

/// In-progress product: series factors multiply, spectator factors union.
struct PartialProduct<C: Scalar> {
    series: LaurentSeries<C>,
    spectators: Vec<(usize, SlotFactor)>,
}

/// Expansion of ŵ₀₂(±z, z_j) at z = ω_a + t: a sum over k of monomials t^k
/// carrying the symbolic factor P₂^{(k)}(z_j − ω_a). For the +z slot the
/// coefficient is (−1)^k/k!, for −z it is +1/k!.
fn pair_kernel_monomials<C: Scalar>(
    a: u8,
    slot: usize,
    minus: bool,
    kmax: i64,
    trunc: i64,
    point: SeriesPoint,
) -> Vec<(LaurentSeries<C>, (usize, SlotFactor))> {
    let mut out = Vec::new();
    let mut kfact: i64 = 1;
    for k in 0..=kmax {
        if k > 0 {
            kfact *= k;
        }
        if k >= trunc {
            break;
        }
        let sign = if minus || k % 2 == 0 { 1 } else { -1 };
        let c = C::from_ratio(sign, kfact);
        out.push((
            LaurentSeries::monomial(point, k, c, trunc),
            (
                slot,
                SlotFactor {
                    pole: a,
                    m: k as u32,
                },
            ),
        ));
    }
    out
}

/// All ordered splittings (g₁, I)(g₂, J) of (g, {0..n-1}) without ŵ₀₁ parts.
fn ordered_partitions(g: u32, n: usize) -> Vec<(u32, Vec<usize>, u32, Vec<usize>)> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << n) {
        let i_set: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
        let j_set: Vec<usize> = (0..n).filter(|b| mask & (1 << b) == 0).collect();
        for g1 in 0..=g {
            let g2 = g - g1;
            if (g1 == 0 && i_set.is_empty()) || (g2 == 0 && j_set.is_empty()) {
                continue;
            }
            out.push((g1, i_set.clone(), g2, j_set.clone()));
        }
    }
    out
}

/// Append the expansion of the stable part ŵ_{gp,1+|set|}(±z, 𝐳_set) to the
/// running products.
fn extend_with_stable_part<C: Scalar>(
    ctx: &RecursionContext<C>,
    table: &CorrelationTable<C>,
    products: Vec<PartialProduct<C>>,
    gp: u32,
    set: &[usize],
    a: u8,
    minus: bool,
    trunc: i64,
    point: SeriesPoint,
) -> Result<Vec<PartialProduct<C>>> {
    let part = table.get(gp, 1 + set.len() as u32)?;
    let mut out = Vec::new();
    for term in &part.terms {
        let zf = &term.factors[0];
        let mut zs = ctx.slot_series(a, zf.pole, zf.m, trunc, point);
        if minus {
            zs = zs.negate_arg();
        }
        zs = zs.scale(&term.coeff);
        for p in &products {
            let mut spect = p.spectators.clone();
            for (idx, slot) in set.iter().enumerate() {
                spect.push((*slot, term.factors[idx + 1]));
            }
            out.push(PartialProduct {
                series: p.series.mul(&zs),
                spectators: spect,
            });
        }
    }
    Ok(out)
}

/// Append a ŵ₀₂(±z, z_slot) factor to the running products.
fn extend_with_pair_kernel<C: Scalar>(
    products: Vec<PartialProduct<C>>,
    a: u8,
    slot: usize,
    minus: bool,
    kmax: i64,
    trunc: i64,
    point: SeriesPoint,
) -> Vec<PartialProduct<C>> {
    let monos = pair_kernel_monomials::<C>(a, slot, minus, kmax, trunc, point);
    let mut out = Vec::new();
    for (series, spec) in &monos {
        for p in &products {
            let mut spect = p.spectators.clone();
            spect.push(*spec);
            out.push(PartialProduct {
                series: p.series.mul(series),
                spectators: spect,
            });
        }
    }
    out
}

/// Assemble R⁽²⁾ŵ(z, −z; 𝐳)|_{z=ω_a+t} as grouped Laurent series in t with
/// symbolic spectator factors, for ŵ_{g,n+1} with n spectator slots.
/// a = 0 expands at the origin instead.
pub fn assemble_r2w<C: Scalar>(
    ctx: &RecursionContext<C>,
    table: &CorrelationTable<C>,
    g: u32,
    n: usize,
    a: u8,
    trunc: i64,
) -> Result<Vec<IntegrandGroup<C>>> {
    let point = if a == 0 {
        SeriesPoint::Origin
    } else {
        SeriesPoint::HalfPeriod(a)
    };
    let kmax = trunc + 2;
    let mut groups: BTreeMap<Vec<(usize, SlotFactor)>, LaurentSeries<C>> = BTreeMap::new();
    let mut add = |p: PartialProduct<C>| {
        let mut key = p.spectators;
        key.sort_by_key(|(slot, _)| *slot);
        match groups.get_mut(&key) {
            Some(s) => *s = s.add(&p.series),
            None => {
                groups.insert(key, p.series);
            }
        }
    };

    // Direct term ŵ_{g−1, n+2}(z, −z, 𝐳).
    if g >= 1 {
        if g == 1 && n == 0 {
            // ŵ₀₂(z, −z) = P₂(2z) = P₂(2t) at any ramification point.
            let s = ctx
                .p2m_at_origin(0, trunc, point)
                .scale_arg(&C::from_i64(2))
                .expect("exact powers of two");
            add(PartialProduct {
                series: s,
                spectators: Vec::new(),
            });
        } else {
            let lower = table.get(g - 1, n as u32 + 2)?;
            for term in &lower.terms {
                let f0 = &term.factors[0];
                let f1 = &term.factors[1];
                let s0 = ctx.slot_series(a, f0.pole, f0.m, trunc, point);
                let s1 = ctx
                    .slot_series(a, f1.pole, f1.m, trunc, point)
                    .negate_arg();
                let mut spect = Vec::new();
                for (idx, slot) in (0..n).enumerate() {
                    spect.push((slot, term.factors[idx + 2]));
                }
                add(PartialProduct {
                    series: s0.mul(&s1).scale(&term.coeff),
                    spectators: spect,
                });
            }
        }
    }

    // Ordered factorizations ŵ_{g₁,1+|I|}(z, 𝐳_I) · ŵ_{g₂,1+|J|}(−z, 𝐳_J).
    for (g1, i_set, g2, j_set) in ordered_partitions(g, n) {
        let seed = vec![PartialProduct {
            series: LaurentSeries::one(point, trunc),
            spectators: Vec::new(),
        }];
        let after_first = if g1 == 0 && i_set.len() == 1 {
            extend_with_pair_kernel(seed, a, i_set[0], false, kmax, trunc, point)
        } else {
            extend_with_stable_part(ctx, table, seed, g1, &i_set, a, false, trunc, point)?
        };
        let after_second = if g2 == 0 && j_set.len() == 1 {
            extend_with_pair_kernel(after_first, a, j_set[0], true, kmax, trunc, point)
        } else {
            extend_with_stable_part(ctx, table, after_first, g2, &j_set, a, true, trunc, point)?
        };
        for p in after_second {
            add(p);
        }
    }

    Ok(groups
        .into_iter()
        .map(|(spectators, series)| IntegrandGroup { series, spectators })
        .collect())
}

/// One recursion step: build ŵ_{g,n+1} from the table entries below it.
pub fn recursion_step<C: Scalar>(
    ctx: &RecursionContext<C>,
    table: &CorrelationTable<C>,
    g: u32,
    n_spectators: usize,
) -> Result<MultiExpr<C>> {
    let n = n_spectators;
    // Largest pole order of the integrand, equal to the pole order of the
    // result in its first slot.
    let p_max = (6 * g as i64 - 2 + 2 * n as i64).max(2);
    let trunc = p_max + 4;
    let mut out = MultiExpr::new(n + 1);

    for a in 1..=3u8 {
        let point = SeriesPoint::HalfPeriod(a);
        let groups = assemble_r2w(ctx, table, g, n, a, trunc)?;
        let inv = ctx.inv_two_wp_prime_sq(a, trunc, point);
        let fs: Vec<(Vec<(usize, SlotFactor)>, LaurentSeries<C>)> = groups
            .into_iter()
            .map(|grp| (grp.spectators, grp.series.mul(&inv)))
            .collect();
        let assembly_scale = fs
            .iter()
            .map(|(_, f)| series_scale(f))
            .fold(0f64, f64::max);
        for (spectators, f) in fs {
            assert!(
                f.ord() >= -p_max,
                "integrand pole deeper than the structural bound at half period {a}"
            );
            // A group whose every coefficient sits at the noise floor of
            // the whole assembly is cancellation debris from the two
            // ordered copies of a factorization; nothing genuine survives
            // in it.
            let scale = series_scale(&f);
            if scale <= ctx.zero_tol * assembly_scale {
                continue;
            }
            // Every slot series entering a product is even in t, so each
            // group's series has the parity of Σm over its spectator
            // factors. Coefficients of the wrong parity must sit at the
            // noise floor relative to the group's own size.
            let parity = spectators.iter().map(|(_, sf)| sf.m).sum::<u32>() % 2;
            let mut e = f.ord();
            while e < f.trunc_order().min(2) {
                if e.rem_euclid(2) as u32 != parity {
                    assert!(
                        f.coeff(e).negligible(ctx.zero_tol * scale),
                        "t^{e} coefficient off the group parity at half period {a}"
                    );
                }
                e += 1;
            }
            if parity == 1 {
                continue;
            }
            // Res_{t=0} u·f with u = Σ_{k≥1} t^k (−1)^{k−1} P₂^{(k−1)}(z₀−ω_a)/k!
            // picks Σ_{k odd} f_{−k−1}/k! · P₂^{(k−1)}(z₀−ω_a).
            let mut k = 1i64;
            let mut kfact = 1i64;
            while k <= -f.ord() - 1 {
                if k > 1 {
                    kfact *= k * (k - 1);
                }
                let c = f.coeff(-k - 1);
                if !c.negligible(ctx.zero_tol * scale) {
                    let mut factors = vec![SlotFactor {
                        pole: a,
                        m: (k - 1) as u32,
                    }];
                    let mut spect_sorted = spectators.clone();
                    spect_sorted.sort_by_key(|(slot, _)| *slot);
                    for (slot, sf) in &spect_sorted {
                        assert_eq!(*slot + 1, factors.len(), "spectator slots must cover 1..=n");
                        factors.push(*sf);
                    }
                    out.push(MultiTerm {
                        coeff: c.div(&C::from_i64(kfact)).expect("factorial is invertible"),
                        factors,
                    });
                }
                k += 2;
            }
        }
    }

    // At the origin the deck transformation is also ramified, but every
    // contribution is regular there: the residue vanishes identically.
    let origin_groups = assemble_r2w(ctx, table, g, n, 0, 2)?;
    let inv0 = ctx.inv_two_wp_prime_sq(0, 2, SeriesPoint::Origin);
    let origin_fs: Vec<LaurentSeries<C>> = origin_groups
        .into_iter()
        .map(|grp| grp.series.mul(&inv0))
        .collect();
    let origin_scale = origin_fs
        .iter()
        .map(series_scale)
        .fold(0f64, f64::max);
    for f in origin_fs {
        let scale = series_scale(&f);
        if scale <= ctx.zero_tol * origin_scale {
            continue;
        }
        assert!(
            f.ord() >= 0 || (f.ord()..0).all(|e| f.coeff(e).negligible(ctx.zero_tol * scale)),
            "unexpected singular part at the origin"
        );
    }

    validate_entry(&out, g, (n + 1) as u32);
    Ok(out)
}

/// Structural invariants of a stored correlation: one factor per slot at a
/// genuine half period, every derivative order even, and the pole depth
/// exactly 6g−4+2n.
pub fn validate_entry<C: Scalar>(expr: &MultiExpr<C>, g: u32, n: u32) {
    assert_eq!(expr.n as u32, n);
    assert!(!expr.terms.is_empty(), "empty correlation ({g},{n})");
    for t in &expr.terms {
        assert_eq!(t.factors.len(), expr.n);
        for f in &t.factors {
            assert!((1..=3).contains(&f.pole), "pole escaped the half periods");
            assert!(f.m % 2 == 0, "odd derivative order in ({g},{n})");
        }
    }
    let expect = 6 * g as i64 - 4 + 2 * n as i64;
    assert_eq!(
        expr.max_pole_order() as i64,
        expect,
        "pole order of ({g},{n}) off the structural value"
    );
}

/// Fill the table with every stable ŵ_{g,n}, n ≥ 1, of level 2g−2+n ≤ level.
pub fn run_to_level<C: Scalar>(ctx: &RecursionContext<C>, level: u32) -> Result<CorrelationTable<C>> {
    let mut table = CorrelationTable::new();
    for lvl in 1..=level {
        for g in 0..=(lvl + 2) / 2 {
            let n_total = lvl as i64 + 2 - 2 * g as i64;
            if n_total < 1 {
                continue;
            }
            let entry = recursion_step(ctx, &table, g, (n_total - 1) as usize)?;
            table.insert(g, n_total as u32, entry);
        }
    }
    table.level = level;
    Ok(table)
}

/// Free energy F_g, g ≥ 2, from its one-point function:
/// F_g = 1/(2−2g) Σ_a Res_{z=ω_a} φ(z) ŵ_{g,1}(z) with φ′ = ℘′², using
/// φ = (2/5)℘℘′ + (2/5)g₂ζ − (3/5)g₃ z. Adding any constant to φ must not
/// change the result, since the residues of ŵ_{g,1} sum to zero.
pub fn free_energy(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    phi_shift: &ApComplex,
) -> Result<ApComplex> {
    assert!(g >= 2, "free energy from residues needs g >= 2");
    let w = table.get(g, 1)?;
    let d = &curve.data;
    let mut acc = ApComplex::zero();
    for a in 1..=3u8 {
        // Taylor data of φ at ω_a deep enough for the worst pole order.
        let depth = w.max_pole_order() as i64 + 2;
        let e_a = d.e[a as usize - 1].clone();
        let wp = wp_expand_at_halfperiod(a, &e_a, &d.g2, depth + 2);
        let dwp = wp.derivative();
        // ζ(ω_a + t) = ζ(ω_a) − ∫ ℘ dt.
        let omega_a = curve.half_period(a);
        let zeta_a = curve.p_eval(PKind::Zeta, &omega_a)?;
        let zeta = LaurentSeries::monomial(SeriesPoint::HalfPeriod(a), 0, zeta_a, depth + 2)
            .sub(&wp.integrate().map_err(CoreError::Algebra)?);
        let linear = LaurentSeries::from_coeffs(
            SeriesPoint::HalfPeriod(a),
            0,
            vec![omega_a, ApComplex::one()],
            depth + 2,
        );
        let mut phi = wp
            .mul(&dwp)
            .scale_ratio(2, 5)
            .add(&zeta.scale(&d.g2).scale_ratio(2, 5))
            .sub(&linear.scale(&d.g3).scale_ratio(3, 5));
        phi = phi.add(&LaurentSeries::monomial(
            SeriesPoint::HalfPeriod(a),
            0,
            phi_shift.clone(),
            depth + 2,
        ));
        for term in &w.terms {
            let f = &term.factors[0];
            if f.pole != a {
                continue;
            }
            // Res φ·P₂^{(m)}(z−ω_a) = (−1)^m (m+1)! · [t^{m+1}] φ.
            let mut fact: i64 = 1;
            for j in 2..=(f.m as i64 + 1) {
                fact *= j;
            }
            let sign = if f.m % 2 == 0 { 1 } else { -1 };
            let res = phi.coeff(f.m as i64 + 1).mul_i64(sign * fact);
            acc = acc.add(&term.coeff.mul(&res));
        }
    }
    Ok(acc.div_i64(2 - 2 * g as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{a_quadrature, lattice_dist};
    use wtr_algebra::Lcg64;

    fn numeric_ctx(tau_re: f64, tau_im: f64, digits: u32) -> (NumericCurve, RecursionContext<ApComplex>) {
        let curve = NumericCurve::general(ApComplex::from_f64_pair(tau_re, tau_im), digits).unwrap();
        let ctx = RecursionContext::numeric(&curve);
        (curve, ctx)
    }

    #[test]
    fn w03_structure_matches_branch_point_data() {
        // ŵ₀₃ = Σ_a Π_i P₂(z_i−ω_a) / ℘″(ω_a)², with ℘″(ω_a) = 2(e_a−e_b)(e_a−e_c).
        let (curve, ctx) = numeric_ctx(0.3, 1.2, 40);
        let table = run_to_level(&ctx, 1).unwrap();
        let w03 = table.get(0, 3).unwrap();
        assert_eq!(w03.terms.len(), 3);
        let d = &curve.data;
        for t in &w03.terms {
            let a = t.factors[0].pole;
            assert!(t.factors.iter().all(|f| f.pole == a && f.m == 0));
            let ia = a as usize - 1;
            let ib = (ia + 1) % 3;
            let ic = (ia + 2) % 3;
            let wpp = d.e[ia].sub(&d.e[ib]).mul(&d.e[ia].sub(&d.e[ic])).mul_i64(2);
            let expect = wpp.mul(&wpp).inv().unwrap();
            assert!(t.coeff.sub(&expect).abs_f64() < 1e-35);
        }
    }

    #[test]
    fn w11_has_the_expected_profile() {
        let (_, ctx) = numeric_ctx(0.3, 1.2, 40);
        let table = run_to_level(&ctx, 1).unwrap();
        let w11 = table.get(1, 1).unwrap();
        // Orders 2 and 4 at each half period.
        assert_eq!(w11.max_pole_order(), 4);
        for t in &w11.terms {
            assert!(t.factors[0].m == 0 || t.factors[0].m == 2);
        }
        assert_eq!(w11.terms.len(), 6);
    }

    #[test]
    fn correlations_are_symmetric_in_their_arguments() {
        let (curve, ctx) = numeric_ctx(-0.4, 0.9, 40);
        let table = run_to_level(&ctx, 2).unwrap();
        let mut rng = Lcg64::new(0xabcdef);
        for (g, n) in [(0u32, 3u32), (0, 4), (1, 2)] {
            let expr = table.get(g, n).unwrap();
            let pts: Vec<ApComplex> = (0..n)
                .map(|_| ApComplex::from_f64_pair(rng.next_in(0.05, 0.45), rng.next_in(0.1, 0.4)))
                .collect();
            let base = w_eval(&curve, expr, &pts).unwrap();
            // Swap two arguments.
            let mut swapped = pts.clone();
            swapped.swap(0, n as usize - 1);
            let v = w_eval(&curve, expr, &swapped).unwrap();
            let scale = base.abs_f64().max(1.0);
            assert!(
                base.sub(&v).abs_f64() < 1e-28 * scale,
                "asymmetry in ({g},{n})"
            );
        }
    }

    #[test]
    fn correlations_are_deck_invariant_per_slot() {
        let (curve, ctx) = numeric_ctx(0.3, 1.2, 40);
        let table = run_to_level(&ctx, 2).unwrap();
        let expr = table.get(1, 2).unwrap();
        let pts = vec![
            ApComplex::from_f64_pair(0.21, 0.17),
            ApComplex::from_f64_pair(0.05, 0.33),
        ];
        let base = w_eval(&curve, expr, &pts).unwrap();
        let flipped = vec![pts[0].neg(), pts[1].clone()];
        let v = w_eval(&curve, expr, &flipped).unwrap();
        let scale = base.abs_f64().max(1.0);
        assert!(base.sub(&v).abs_f64() < 1e-28 * scale);
    }

    #[test]
    fn a_period_of_a_correlation_vanishes() {
        let (curve, ctx) = numeric_ctx(0.3, 1.2, 30);
        let table = run_to_level(&ctx, 1).unwrap();
        let w11 = table.get(1, 1).unwrap();
        let f = |z: &ApComplex| w_eval(&curve, w11, std::slice::from_ref(z));
        let integral = a_quadrature(&curve, &f, 1e-22).unwrap();
        assert!(integral.abs_f64() < 1e-18);
    }

    #[test]
    fn exact_and_numeric_tables_agree_on_the_special_curve() {
        let exact_ctx = RecursionContext::exact_special();
        let exact = run_to_level(&exact_ctx, 2).unwrap();

        let curve = NumericCurve::special(45).unwrap();
        let ctx = RecursionContext::numeric(&curve);
        let numeric = run_to_level(&ctx, 2).unwrap();

        // γ is the rescaled lattice G₂.
        let gamma = curve.data.big_g2.clone();

        for (g, n) in [(0u32, 3u32), (1, 1), (0, 4), (1, 2)] {
            let ex = exact.get(g, n).unwrap();
            let nu = numeric.get(g, n).unwrap();
            assert_eq!(ex.terms.len(), nu.terms.len(), "size mismatch at ({g},{n})");
            for et in &ex.terms {
                let mut matched = false;
                for nt in &nu.terms {
                    if nt.factors == et.factors {
                        let val = et.coeff.eval(&gamma, 45).unwrap();
                        let scale = val.abs_f64().max(1.0);
                        assert!(
                            val.sub(&nt.coeff).abs_f64() < 1e-32 * scale,
                            "coefficient mismatch at ({g},{n}) {:?}",
                            et.factors
                        );
                        matched = true;
                    }
                }
                assert!(matched, "exact term missing numerically at ({g},{n})");
            }
        }
    }

    #[test]
    fn run_to_level_three_passes_structural_checks() {
        let (_, ctx) = numeric_ctx(0.3, 1.2, 35);
        let table = run_to_level(&ctx, 3).unwrap();
        let expect: Vec<(u32, u32)> = vec![
            (0, 3),
            (0, 4),
            (0, 5),
            (1, 1),
            (1, 2),
            (1, 3),
            (2, 1),
        ];
        let got: Vec<(u32, u32)> = table.keys().collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn free_energy_is_shift_invariant() {
        let curve = NumericCurve::special(40).unwrap();
        let ctx = RecursionContext::numeric(&curve);
        let table = run_to_level(&ctx, 3).unwrap();
        let f2 = free_energy(&curve, &table, 2, &ApComplex::zero()).unwrap();
        let f2_shifted =
            free_energy(&curve, &table, 2, &ApComplex::from_i64_pair(17, 0)).unwrap();
        assert!(f2.sub(&f2_shifted).abs_f64() < 1e-30 * f2.abs_f64().max(1.0));
        assert!(f2.abs_f64() > 1e-12, "free energy should not vanish");
    }

    #[test]
    fn exact_w03_coefficients_are_cyclotomic() {
        // On y² = 4x³−4 the branch values are cube roots of unity, so the
        // ŵ₀₃ coefficients 1/℘″(ω_a)² = 1/(36 e_a⁴) lie in ℚ(ω).
        let ctx = RecursionContext::exact_special();
        let table = run_to_level(&ctx, 1).unwrap();
        let w03 = table.get(0, 3).unwrap();
        for t in &w03.terms {
            let a = t.factors[0].pole as usize - 1;
            let e_a = ctx.data.e[a].clone();
            let expect = e_a
                .powi(4)
                .unwrap()
                .mul_i64(36)
                .inv()
                .unwrap();
            assert!(t.coeff.sub(&expect).is_zero());
        }
    }

    #[test]
    fn marked_pole_distances_respect_the_scaled_lattice() {
        let curve = NumericCurve::special(30).unwrap();
        let (pa, pb) = curve.periods();
        let z = ApComplex::from_f64_pair(0.4, 0.2);
        let w = z.add(&pa.mul_i64(2)).add(&pb);
        assert!(lattice_dist(&curve, &z, &w) < 1e-12);
    }
}
