//! Numeric verifiers for the loop equations satisfied by the correlation
//! functions and for the cycle-integral identities they imply.
//!
//! Everything here works with scalar densities: a correlation differential
//! divided by its dz factors, so that ŵ₀₁(z) = ℘′(z)², ŵ₀₂(z₁,z₂) =
//! P₂(z₁−z₂), and the stored [`MultiExpr`] tables cover the stable range.
//! The central object is the A-cycle integral
//!
//!   B_{g,n+1}(𝐳) = −∮_A R⁽²⁾ŵ_{g,n+1}(z,−z,𝐳) / (2℘′(z)²) dz,
//!
//! taken along a horizontal contour close to the real axis, below every
//! sample point. The integrand has double poles at the half periods and at
//! ±z_i; the ±z_i pair also carries opposite simple-pole residues ±r_i,
//! which the even pole basis cannot absorb. [`b_loop_integral`] therefore
//! subtracts r_i·(P₁(z−z_i) − P₁(z+z_i)), whose integral along that contour
//! is exactly −2πi·r_i for points inside the fundamental strip, reduces the
//! remainder to the pole basis, and reads the cycle integral off the
//! constant block.
//!
//! The checks return one [`CheckReport`] per invocation and do not panic on
//! a failed identity; failures are recorded in the report. Agreement with
//! the trapezoid contour quadrature is treated as a precondition instead
//! and raises an error when violated, since a disagreement there means the
//! basis reduction itself cannot be trusted.

use wtr_algebra::{AbelianGroup, ApComplex, Field, LaurentSeries, Lcg64, Ring, SeriesPoint};

use crate::basis::{a_period, a_quadrature, reduce_to_basis, PolePoint};
use crate::elliptic::{NumericCurve, PKind};
use crate::recursion::{
    assemble_r2w, run_to_level, w_eval, CorrelationTable, IntegrandGroup, MultiExpr,
    RecursionContext, SlotFactor,
};
use crate::{CoreError, Result};

/// How a check compared its two sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// Both sides are exact canonical forms; pass means they are identical.
    Exact,
    /// Both sides are floating evaluations; pass gates the relative deviation.
    Numeric,
}

/// Outcome of one identity check.
///
/// Deviations are normalized by max(1, |left|, |right|); residual-style
/// checks report the residual on the left, zero on the right, and normalize
/// by the magnitude of the largest term that entered the cancellation. The
/// pass flag gates `max_rel_dev <= tolerance`.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: String,
    pub mode: CheckMode,
    pub inputs: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub max_abs_dev: f64,
    pub max_rel_dev: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sampling and tolerance knobs shared by the numeric checks.
#[derive(Clone, Debug)]
pub struct IdentityConfig {
    pub digits: u32,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl IdentityConfig {
    /// Defaults: five sample tuples and a pass threshold twenty orders of
    /// magnitude above the working precision floor.
    pub fn new(digits: u32) -> Self {
        IdentityConfig {
            digits,
            samples: 5,
            seed: 11,
            tolerance: 10f64.powi(20 - digits as i32),
        }
    }
}

fn fmt_c(c: &ApComplex) -> String {
    format!("{:.16e} {:+.16e}i", c.re_f64(), c.im_f64())
}

fn curve_desc(curve: &NumericCurve) -> String {
    if curve.special {
        "special curve".to_string()
    } else {
        let tau = curve.ctx.tau();
        format!("tau = {:.6} {:+.6}i", tau.re_f64(), tau.im_f64())
    }
}

fn describe(curve: &NumericCurve, cfg: &IdentityConfig) -> String {
    format!(
        "{}, digits = {}, samples = {}, seed = {}",
        curve_desc(curve),
        cfg.digits,
        cfg.samples,
        cfg.seed
    )
}

/// Accumulates (left, right) value pairs into a report.
struct DevAgg {
    left: Vec<String>,
    right: Vec<String>,
    max_abs: f64,
    max_rel: f64,
}

impl DevAgg {
    fn new() -> Self {
        DevAgg {
            left: Vec::new(),
            right: Vec::new(),
            max_abs: 0.0,
            max_rel: 0.0,
        }
    }

    fn push(&mut self, left: &ApComplex, right: &ApComplex) {
        let abs = left.sub(right).abs_f64();
        let scale = left.abs_f64().max(right.abs_f64()).max(1.0);
        self.left.push(fmt_c(left));
        self.right.push(fmt_c(right));
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(abs / scale);
    }

    fn push_residual(&mut self, residual: &ApComplex, term_scale: f64) {
        let abs = residual.abs_f64();
        self.left.push(fmt_c(residual));
        self.right.push(fmt_c(&ApComplex::zero()));
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(abs / term_scale.max(1.0));
    }

    fn into_report(self, name: String, inputs: String, tolerance: f64) -> CheckReport {
        let pass = self.max_rel.is_finite() && self.max_rel <= tolerance;
        CheckReport {
            name,
            mode: CheckMode::Numeric,
            inputs,
            left: self.left,
            right: self.right,
            max_abs_dev: self.max_abs,
            max_rel_dev: self.max_rel,
            tolerance,
            pass,
        }
    }
}

/// Deterministic sample points in the fundamental cell, kept clear of the
/// lattice, the half lattice, each other (also after negation and pairwise
/// addition), the horizontal quadrature contour, and the fixed evaluation
/// points used by the basis reduction.
///
/// Points are (u + vτ)·λ with u, v drawn from [0.16, 0.44]. That window by
/// itself keeps z, −z, 2z and all sums z_i + z_j away from the lattice and
/// the half lattice; the rejections below handle near-collisions among
/// draws and with the fixed points.
pub fn sample_points(curve: &NumericCurve, count: usize, seed: u64) -> Vec<ApComplex> {
    const RESERVED: [(f64, f64); 4] = [
        (0.2, 0.2),
        (1.0 / 3.0, 1.0 / 3.0),
        (2.0 / 7.0, 1.0 / 7.0),
        (1.0 / 7.0, 2.0 / 7.0),
    ];
    let mut rng = Lcg64::new(seed);
    let mut coords: Vec<(f64, f64)> = Vec::with_capacity(count);
    let mut guard = 0usize;
    while coords.len() < count {
        guard += 1;
        assert!(guard < 10_000, "rejection sampling failed to terminate");
        let u = rng.next_in(0.16, 0.44);
        let v = rng.next_in(0.16, 0.44);
        if (u - 1.0 / 3.0).abs() < 0.02 {
            continue;
        }
        let near = |(a, b): (f64, f64)| (u - a).abs().max((v - b).abs()) < 0.02;
        if RESERVED.iter().any(|p| near(*p)) || coords.iter().any(|p| near(*p)) {
            continue;
        }
        coords.push((u, v));
    }
    let tau = curve.ctx.tau().clone();
    coords
        .iter()
        .map(|(u, v)| {
            let z = ApComplex::from_f64_pair(*u, 0.0)
                .add(&tau.mul(&ApComplex::from_f64_pair(*v, 0.0)));
            z.mul(&curve.scale)
        })
        .collect()
}

fn wp_prime(curve: &NumericCurve, z: &ApComplex) -> Result<ApComplex> {
    curve.p_eval(PKind::WpPrime, z)
}

fn p2m(curve: &NumericCurve, m: u32, z: &ApComplex) -> Result<ApComplex> {
    curve.p_eval(PKind::P2m(m), z)
}

/// ŵ_{h,k}(args), extending the stored tables by the unstable entries
/// ŵ₀₁(z) = ℘′(z)² and ŵ₀₂(z₁,z₂) = P₂(z₁−z₂).
fn cor_eval(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    h: u32,
    args: &[ApComplex],
) -> Result<ApComplex> {
    match (h, args.len()) {
        (0, 1) => {
            let d = wp_prime(curve, &args[0])?;
            Ok(d.mul(&d))
        }
        (0, 2) => p2m(curve, 0, &args[0].sub(&args[1])),
        _ => w_eval(curve, table.get(h, args.len() as u32)?, args),
    }
}

/// Derivative of [`cor_eval`] in its first argument.
fn cor_eval_d0(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    h: u32,
    args: &[ApComplex],
) -> Result<ApComplex> {
    match (h, args.len()) {
        (0, 1) => {
            let d = wp_prime(curve, &args[0])?;
            let dd = p2m(curve, 2, &args[0])?;
            Ok(d.mul(&dd).mul_i64(2))
        }
        (0, 2) => p2m(curve, 1, &args[0].sub(&args[1])),
        _ => {
            let expr = table.get(h, args.len() as u32)?;
            let mut acc = ApComplex::zero();
            for t in &expr.terms {
                let mut prod = t.coeff.clone();
                for (i, f) in t.factors.iter().enumerate() {
                    let arg = args[i].sub(&curve.half_period(f.pole));
                    let m = if i == 0 { f.m + 1 } else { f.m };
                    prod = prod.mul(&curve.p_eval(PKind::P2m(m), &arg)?);
                }
                acc = acc.add(&prod);
            }
            Ok(acc)
        }
    }
}

/// Σ over ordered splittings (g₁, I)(g₂, J) of ŵ_{g₁,1+|I|}(z₁, 𝐳_I) ·
/// ŵ_{g₂,1+|J|}(z₂, 𝐳_J). With `include_disk` the (0, ∅) parts carrying a
/// bare ŵ₀₁ factor are kept; without them the sum is the one entering the
/// recursion numerator.
fn partition_sum(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    z1: &ApComplex,
    z2: &ApComplex,
    specs: &[ApComplex],
    include_disk: bool,
) -> Result<ApComplex> {
    let n = specs.len();
    let mut acc = ApComplex::zero();
    for g1 in 0..=g {
        let g2 = g - g1;
        for mask in 0..(1usize << n) {
            let i_empty = mask == 0;
            let j_full = mask == (1 << n) - 1;
            if !include_disk && ((g1 == 0 && i_empty) || (g2 == 0 && j_full)) {
                continue;
            }
            let mut a1 = vec![z1.clone()];
            let mut a2 = vec![z2.clone()];
            for (j, s) in specs.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    a1.push(s.clone());
                } else {
                    a2.push(s.clone());
                }
            }
            let f1 = cor_eval(curve, table, g1, &a1)?;
            let f2 = cor_eval(curve, table, g2, &a2)?;
            acc = acc.add(&f1.mul(&f2));
        }
    }
    Ok(acc)
}

/// The recursion numerator R⁽²⁾ŵ_{g,n+1}(z, −z, 𝐳) at a point: the genus
/// lowering term plus all ordered splittings without the (0, ∅) parts.
fn r2w_at(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    z: &ApComplex,
    specs: &[ApComplex],
) -> Result<ApComplex> {
    let mut acc = ApComplex::zero();
    if g >= 1 {
        let mut args = vec![z.clone(), z.neg()];
        args.extend_from_slice(specs);
        acc = cor_eval(curve, table, g - 1, &args)?;
    }
    acc = acc.add(&partition_sum(curve, table, g, z, &z.neg(), specs, false)?);
    Ok(acc)
}

/// 1/(2℘′(z)²).
fn inv_two_wp_prime_sq_at(curve: &NumericCurve, z: &ApComplex) -> Result<ApComplex> {
    let d = wp_prime(curve, z)?;
    d.mul(&d).mul_i64(2).inv().map_err(CoreError::Algebra)
}

/// Deepest half-period pole order of the integrand for the (g, n+1) row.
fn row_pole_depth(g: u32, n: u32) -> i64 {
    (6 * g as i64 + 2 * n as i64 - 2).max(2)
}

/// Local data of the b-loop integrand at the sample-point pole z = z_i: the
/// coefficient h of t⁻² and the residue r of t⁻¹. The mirror pole at −z_i
/// carries the same h and residue −r.
fn marked_pole_data(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    specs: &[ApComplex],
    i: usize,
) -> Result<(ApComplex, ApComplex)> {
    let zi = &specs[i];
    let mut args = vec![zi.neg()];
    for (j, s) in specs.iter().enumerate() {
        if j != i {
            args.push(s.clone());
        }
    }
    let u = cor_eval(curve, table, g, &args)?;
    let du = cor_eval_d0(curve, table, g, &args)?;
    let wp1 = wp_prime(curve, zi)?;
    let wp2 = p2m(curve, 2, zi)?;
    let inv2 = wp1.mul(&wp1).mul_i64(2).inv().map_err(CoreError::Algebra)?;
    let h = u.mul(&inv2);
    let cubed_inv = wp1.powi(-3).map_err(CoreError::Algebra)?;
    let r = du.neg().mul(&inv2).sub(&u.mul(&wp2).mul(&cubed_inv));
    Ok((h, r))
}

/// Numeric weight of an integrand group's spectator factors.
fn spectator_weight(
    curve: &NumericCurve,
    specs: &[ApComplex],
    factors: &[(usize, SlotFactor)],
) -> Result<ApComplex> {
    let mut w = ApComplex::one();
    for (slot, f) in factors {
        let base = if f.pole == 0 {
            specs[*slot].clone()
        } else {
            specs[*slot].sub(&curve.half_period(f.pole))
        };
        w = w.mul(&curve.p_eval(PKind::P2m(f.m), &base)?);
    }
    Ok(w)
}

/// Collapse integrand groups onto numeric spectator values.
fn collapse_groups(
    curve: &NumericCurve,
    specs: &[ApComplex],
    groups: &[IntegrandGroup<ApComplex>],
    point: SeriesPoint,
    trunc: i64,
) -> Result<LaurentSeries<ApComplex>> {
    let mut acc = LaurentSeries::zero(point, trunc);
    for g in groups {
        let w = spectator_weight(curve, specs, &g.spectators)?;
        acc = acc.add(&g.series.scale(&w));
    }
    Ok(acc)
}

/// Keep the even part of a series that should be even in its argument,
/// checking that the odd coefficients are numerical noise.
fn even_cleaned(s: &LaurentSeries<ApComplex>, rel_tol: f64) -> Result<LaurentSeries<ApComplex>> {
    let ord = s.ord();
    let trunc = s.trunc_order();
    if ord >= trunc {
        return Ok(s.clone());
    }
    let mut scale = 0f64;
    for e in ord..trunc {
        if e.rem_euclid(2) == 0 {
            scale = scale.max(s.coeff(e).abs_f64());
        }
    }
    let mut coeffs = Vec::new();
    for e in ord..trunc {
        let c = s.coeff(e);
        if e.rem_euclid(2) == 0 {
            coeffs.push(c);
        } else {
            if c.abs_f64() > rel_tol * scale.max(1.0) {
                return Err(CoreError::Domain(format!(
                    "odd coefficient {:.3e} at exponent {} of an even series (scale {:.3e})",
                    c.abs_f64(),
                    e,
                    scale
                )));
            }
            coeffs.push(ApComplex::zero());
        }
    }
    Ok(LaurentSeries::from_coeffs(s.point(), ord, coeffs, trunc))
}

/// A-cycle integral of the recursion integrand,
/// B_{g,n+1}(𝐳) = −∮_A R⁽²⁾ŵ_{g,n+1}(z,−z,𝐳)/(2℘′(z)²) dz,
/// along the horizontal contour below every sample point.
///
/// The integrand is reduced to the pole basis after subtracting the paired
/// simple poles at ±z_i; each subtracted pair P₁(z−z_i) − P₁(z+z_i) adds
/// −2πi per unit residue to the contour integral. Sample points must come
/// from [`sample_points`] or satisfy the same clearances, and the table
/// must hold every entry below the (g, n+1) level.
pub fn b_loop_integral(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    n: u32,
    spectators: &[ApComplex],
) -> Result<ApComplex> {
    assert_eq!(spectators.len(), n as usize, "one sample point per slot");
    let ctx = RecursionContext::numeric(curve);
    let trunc = row_pole_depth(g, n) + 4;

    let mut poles: Vec<PolePoint> =
        vec![PolePoint::Half(1), PolePoint::Half(2), PolePoint::Half(3)];
    for z in spectators {
        poles.push(PolePoint::Marked(z.clone()));
    }
    for z in spectators {
        poles.push(PolePoint::Marked(z.neg()));
    }

    let mut marked = Vec::with_capacity(n as usize);
    for i in 0..n as usize {
        marked.push(marked_pole_data(curve, table, g, spectators, i)?);
    }

    let mut expansions: Vec<LaurentSeries<ApComplex>> = Vec::with_capacity(3 + 2 * n as usize);
    for a in 1..=3u8 {
        let point = SeriesPoint::HalfPeriod(a);
        let groups = assemble_r2w(&ctx, table, g, n as usize, a, trunc)?;
        let numer = collapse_groups(curve, spectators, &groups, point, trunc)?;
        let f = numer.mul(&ctx.inv_two_wp_prime_sq(a, trunc, point));
        expansions.push(even_cleaned(&f, ctx.zero_tol)?);
    }
    for pass in 0..2u32 {
        for (i, (h, _)) in marked.iter().enumerate() {
            let point = SeriesPoint::Marked(pass * n + i as u32);
            expansions.push(LaurentSeries::from_coeffs(
                point,
                -2,
                vec![h.clone(), ApComplex::zero()],
                0,
            ));
        }
    }

    let expand = |idx: usize| -> Result<LaurentSeries<ApComplex>> { Ok(expansions[idx].clone()) };
    let eval = |z: &ApComplex| -> Result<ApComplex> {
        let mut v =
            r2w_at(curve, table, g, z, spectators)?.mul(&inv_two_wp_prime_sq_at(curve, z)?);
        for (i, (_, r)) in marked.iter().enumerate() {
            let zi = &spectators[i];
            let pair = curve
                .p_eval(PKind::P1, &z.sub(zi))?
                .sub(&curve.p_eval(PKind::P1, &z.add(zi))?);
            v = v.add(&r.mul(&pair));
        }
        Ok(v)
    };

    let reduced = reduce_to_basis(curve, &poles, &expand, &eval)?;
    let mut cycle = a_period(curve, &reduced);
    let two_pi_i = ApComplex::two_pi_i(curve.digits());
    for (_, r) in &marked {
        cycle = cycle.add(&two_pi_i.mul(r));
    }
    Ok(cycle.neg())
}

/// Quadrature oracle for [`b_loop_integral`]: the same contour integral
/// done by the periodic trapezoid rule, no basis reduction involved.
pub fn b_loop_quadrature(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    n: u32,
    spectators: &[ApComplex],
    tol: f64,
) -> Result<ApComplex> {
    assert_eq!(spectators.len(), n as usize);
    let f = |z: &ApComplex| -> Result<ApComplex> {
        Ok(r2w_at(curve, table, g, z, spectators)?.mul(&inv_two_wp_prime_sq_at(curve, z)?))
    };
    Ok(a_quadrature(curve, &f, tol)?.neg())
}

fn mix_seed(seed: u64, g: u32, n: u32, k: usize) -> u64 {
    let mixed = seed
        ^ (g as u64)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add((n as u64) << 17)
            .wrapping_add((k as u64) << 33);
    mixed | 1
}

/// Check that the completed quadratic combination
/// Q⁽²⁾ŵ(z,𝐳) = R⁽²⁾ŵ(z,−z,𝐳) − ℘′(z)²·(ŵ_{g,n+1}(z,𝐳) + ŵ_{g,n+1}(−z,𝐳)),
/// divided by ℘′(z)², stays regular at every half period and at the origin,
/// so that its poles in z sit only at the sample points ±z_i.
pub fn check_pole_locations(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    n: u32,
    cfg: &IdentityConfig,
) -> Result<CheckReport> {
    let ctx = RecursionContext::numeric(curve);
    let entry = table.get(g, n + 1)?;
    let mut agg = DevAgg::new();
    for k in 0..cfg.samples {
        let specs = sample_points(curve, n as usize, mix_seed(cfg.seed, g, n, k));
        for a in [1u8, 2, 3, 0] {
            let (worst, scale) =
                q2_principal_parts(curve, &ctx, table, entry, g, n, a, &specs, true)?;
            agg.push_residual(&worst, scale);
        }
    }
    Ok(agg.into_report(
        format!("pole-locations ({},{})", g, n),
        describe(curve, cfg),
        cfg.tolerance,
    ))
}

/// Largest principal-part coefficient of Q⁽²⁾ŵ/℘′² at ω_a (a = 0 for the
/// origin), together with the magnitude of the pieces that had to cancel.
/// With `include_disk` false the ŵ₀₁-bearing completion terms are dropped,
/// which must break the cancellation; tests use that mutation.
#[allow(clippy::too_many_arguments)]
fn q2_principal_parts(
    curve: &NumericCurve,
    ctx: &RecursionContext<ApComplex>,
    table: &CorrelationTable<ApComplex>,
    entry: &MultiExpr<ApComplex>,
    g: u32,
    n: u32,
    a: u8,
    specs: &[ApComplex],
    include_disk: bool,
) -> Result<(ApComplex, f64)> {
    let trunc = row_pole_depth(g, n) + 4;
    let point = if a == 0 {
        SeriesPoint::Origin
    } else {
        SeriesPoint::HalfPeriod(a)
    };
    let groups = assemble_r2w(ctx, table, g, n as usize, a, trunc)?;
    let numer = collapse_groups(curve, specs, &groups, point, trunc)?;
    let over_wp2 = numer
        .mul(&ctx.inv_two_wp_prime_sq(a, trunc, point))
        .scale_ratio(2, 1);

    let mut completion = LaurentSeries::zero(point, over_wp2.trunc_order());
    if include_disk {
        for t in &entry.terms {
            let f0 = &t.factors[0];
            let slot0 = ctx.slot_series(a, f0.pole, f0.m, over_wp2.trunc_order(), point);
            let mut w = t.coeff.clone();
            for (i, f) in t.factors.iter().enumerate().skip(1) {
                let base = specs[i - 1].sub(&curve.half_period(f.pole));
                w = w.mul(&curve.p_eval(PKind::P2m(f.m), &base)?);
            }
            completion = completion.add(&slot0.scale(&w.mul_i64(-2)));
        }
    }

    let q = over_wp2.add(&completion);
    let mut worst = ApComplex::zero();
    let mut scale = 0f64;
    for e in q.ord().min(0)..0 {
        let c = q.coeff(e);
        if c.abs_f64() > worst.abs_f64() {
            worst = c;
        }
        if e >= over_wp2.ord() {
            scale = scale.max(over_wp2.coeff(e).abs_f64());
        }
        if e >= completion.ord() {
            scale = scale.max(completion.coeff(e).abs_f64());
        }
    }
    Ok((worst, scale))
}

/// Evaluate the reflected loop equation termwise at sample points and
/// report the residual. The (g, n) row relates the table entry (g, n+1) to
/// lower entries; the (0,0) row reduces to the curve equation
/// ℘′² = 4℘³ − g₂℘ − g₃, and (0,1) to the addition relation for P₂(z±z₁).
/// Rows with 2g+n ≥ 2 carry the disk completion −2ŵ_{g,n+1}(−z,𝐳) and the
/// constant term +2ŵ_{g,n+1}(0,𝐳); both are total residues of
/// Q⁽²⁾ŵ(z′,𝐳)/((℘(z′)−℘(z))℘′(z′)) over one period cell.
pub fn check_loop_equation(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    n: u32,
    cfg: &IdentityConfig,
) -> Result<CheckReport> {
    let mut agg = DevAgg::new();
    for k in 0..cfg.samples {
        let pts = sample_points(curve, n as usize + 1, mix_seed(cfg.seed, g, n, k));
        let z = &pts[n as usize];
        let specs = &pts[..n as usize];
        let (residual, scale) = loop_row_residual(curve, table, g, z, specs)?;
        agg.push_residual(&residual, scale);
    }
    Ok(agg.into_report(
        format!("loop-equation ({},{})", g, n),
        describe(curve, cfg),
        cfg.tolerance,
    ))
}

fn loop_row_residual(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    z: &ApComplex,
    specs: &[ApComplex],
) -> Result<(ApComplex, f64)> {
    let n = specs.len();
    let zm = z.neg();
    let d = &curve.data;
    let wp_z = curve.p_eval(PKind::Wp, z)?;
    let dwp_z = wp_prime(curve, z)?;
    let inv_wp2 = dwp_z.mul(&dwp_z).inv().map_err(CoreError::Algebra)?;

    if g == 0 && n == 0 {
        let sq = partition_sum(curve, table, 0, &zm, &zm, &[], true)?.mul(&inv_wp2);
        let poly = wp_z
            .mul(&wp_z)
            .mul(&wp_z)
            .mul_i64(4)
            .sub(&d.g2.mul(&wp_z))
            .sub(&d.g3);
        let scale = sq.abs_f64().max(poly.abs_f64());
        return Ok((sq.sub(&poly), scale));
    }

    let stable = 2 * g + n as u32 >= 2;
    let mut terms: Vec<ApComplex> = Vec::new();

    if g >= 1 {
        let mut args = vec![zm.clone(), z.clone()];
        args.extend_from_slice(specs);
        terms.push(cor_eval(curve, table, g - 1, &args)?.mul(&inv_wp2));
    }
    terms.push(partition_sum(curve, table, g, &zm, &zm, specs, !stable)?.mul(&inv_wp2));
    if stable {
        let mut full = vec![zm.clone()];
        full.extend_from_slice(specs);
        terms.push(cor_eval(curve, table, g, &full)?.mul_i64(-2));
    }

    for i in 0..n {
        let zi = &specs[i];
        let mut rest_m = vec![zm.clone()];
        let mut rest_i = vec![zi.neg()];
        for (j, s) in specs.iter().enumerate() {
            if j != i {
                rest_m.push(s.clone());
                rest_i.push(s.clone());
            }
        }
        let wp_i = curve.p_eval(PKind::Wp, zi)?;
        let dwp_i = wp_prime(curve, zi)?;
        let ddwp_i = p2m(curve, 2, zi)?;
        let gap = wp_z.sub(&wp_i);
        let gap2_inv = gap.mul(&gap).inv().map_err(CoreError::Algebra)?;

        let w_top = cor_eval(curve, table, g, &rest_m)?;
        terms.push(
            dwp_i
                .mul(&w_top)
                .mul(&gap2_inv)
                .div(&dwp_z)
                .map_err(CoreError::Algebra)?,
        );

        let u = cor_eval(curve, table, g, &rest_i)?;
        let du = cor_eval_d0(curve, table, g, &rest_i)?.neg();
        let den = gap.mul(&dwp_i);
        let dden = dwp_i.mul(&dwp_i).neg().add(&gap.mul(&ddwp_i));
        let den_inv = den.inv().map_err(CoreError::Algebra)?;
        let quotient = du
            .mul(&den_inv)
            .sub(&u.mul(&dden).mul(&den_inv).mul(&den_inv));
        terms.push(quotient.neg());
    }

    let mut args0 = vec![ApComplex::zero()];
    args0.extend_from_slice(specs);
    let at_zero = cor_eval(curve, table, g, &args0)?;
    terms.push(if stable {
        at_zero.mul_i64(2)
    } else {
        at_zero.mul_i64(-2)
    });

    let mut residual = ApComplex::zero();
    let mut scale = 0f64;
    for t in &terms {
        scale = scale.max(t.abs_f64());
        residual = residual.add(t);
    }
    Ok((residual, scale))
}

/// The derivative term of the cycle-integral tower for sample point i,
/// d/dz_i [ (λ P₁(z_i) − πi) ŵ_{g,n}(−z_i, rest) / ℘′(z_i)² ],
/// with λ the lattice scale. Written through the local pole data of the
/// cycle integrand at z_i: with h_i its t⁻² coefficient and r_i = h_i′ its
/// residue, the term equals 2(λ P₁(z_i) − πi)·r_i + 2λ P₂(z_i)·h_i.
fn tower_derivative_term(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    specs: &[ApComplex],
    i: usize,
) -> Result<ApComplex> {
    let (h, r) = marked_pole_data(curve, table, g, specs, i)?;
    let zi = &specs[i];
    let p1 = curve.p_eval(PKind::P1, zi)?.mul(&curve.scale);
    let p2 = p2m(curve, 0, zi)?.mul(&curve.scale);
    let pi_i = ApComplex::two_pi_i(curve.digits()).div_i64(2);
    Ok(p1.sub(&pi_i).mul(&r).add(&p2.mul(&h)).mul_i64(2))
}

/// Verify one row of the tower of cycle-integral identities:
/// B_{g,n+1}(𝐳) = λ ŵ_{g,n+1}(0, 𝐳) + Σ_i d/dz_i [(λ P₁(z_i) − πi) ŵ_{g,n}(−z_i, ·)/℘′(z_i)²],
/// with λ the lattice scale.
///
/// The identity is the residue theorem for P₁(z)·(cycle integrand) summed
/// over one period cell bounded below by the integration contour: the
/// half-period residues reproduce ŵ at 0, the marked poles contribute the
/// derivative terms, and the −πi offset carries the 2πi/λ jump the kernel
/// makes across the cell for the in-cell representative of −z_i.
///
/// Before the high-precision comparison, the left side of the first sample
/// tuple is cross-checked against the contour quadrature on a 16-digit twin
/// of the curve; a disagreement there is an error, not a report entry.
pub fn check_identity_tower(
    curve: &NumericCurve,
    table: &CorrelationTable<ApComplex>,
    g: u32,
    n: u32,
    cfg: &IdentityConfig,
) -> Result<CheckReport> {
    assert!(2 * g + n >= 2, "tower rows need a stable (g, n+1)");
    let twin = if curve.special {
        NumericCurve::special(16)?
    } else {
        NumericCurve::general(curve.ctx.tau().clone(), 16)?
    };
    let twin_ctx = RecursionContext::numeric(&twin);
    let twin_table = run_to_level(&twin_ctx, 2 * g + n - 1)?;

    let mut agg = DevAgg::new();
    for k in 0..cfg.samples {
        let specs = sample_points(curve, n as usize, mix_seed(cfg.seed, g, n, k));
        let b = b_loop_integral(curve, table, g, n, &specs)?;

        if k == 0 {
            let oracle = b_loop_quadrature(&twin, &twin_table, g, n, &specs, 1e-11)?;
            let dev = b.sub(&oracle).abs_f64() / b.abs_f64().max(oracle.abs_f64()).max(1.0);
            if !(dev <= 1e-9) {
                return Err(CoreError::Domain(format!(
                    "cycle integral disagrees with the quadrature oracle: {:.3e} relative",
                    dev
                )));
            }
        }

        let mut args0 = vec![ApComplex::zero()];
        args0.extend_from_slice(&specs);
        let mut rhs = cor_eval(curve, table, g, &args0)?.mul(&curve.scale);
        for i in 0..n as usize {
            rhs = rhs.add(&tower_derivative_term(curve, table, g, &specs, i)?);
        }
        agg.push(&b, &rhs);
    }
    Ok(agg.into_report(
        format!("identity-tower ({},{})", g, n),
        describe(curve, cfg),
        cfg.tolerance,
    ))
}

/// A-cycle integral of P₂(2z)/℘′(z)² against its closed form
/// λ·G₄(5G₄ − G₂²) / (30(20G₄³ − 49G₆²)), the equivalent expression
/// λ·g₂(g₂ − 12G₂²)/(2Δ), and, on the special curve, the exact-zero value
/// forced by G₄ = 0.
pub fn check_cor_ellint(curve: &NumericCurve, cfg: &IdentityConfig) -> Result<CheckReport> {
    let ctx = RecursionContext::numeric(curve);
    let trunc: i64 = 4;
    let mut expansions = Vec::new();
    for a in 1..=3u8 {
        let point = SeriesPoint::HalfPeriod(a);
        let double_angle = ctx
            .p2m_at_origin(0, trunc, point)
            .scale_arg(&ApComplex::from_i64(2))
            .map_err(CoreError::Algebra)?;
        let f = double_angle
            .mul(&ctx.inv_two_wp_prime_sq(a, trunc, point))
            .scale_ratio(2, 1);
        expansions.push(even_cleaned(&f, ctx.zero_tol)?);
    }
    let poles = [PolePoint::Half(1), PolePoint::Half(2), PolePoint::Half(3)];
    let integrand = |z: &ApComplex| -> Result<ApComplex> {
        let num = p2m(curve, 0, &z.mul_i64(2))?;
        let dp = wp_prime(curve, z)?;
        num.div(&dp.mul(&dp)).map_err(CoreError::Algebra)
    };
    let expand = |idx: usize| -> Result<LaurentSeries<ApComplex>> { Ok(expansions[idx].clone()) };
    let reduced = reduce_to_basis(curve, &poles, &expand, &integrand)?;
    let cycle = a_period(curve, &reduced);

    let oracle = a_quadrature(curve, &integrand, 1e-11)?;
    oracle_gate(&cycle, &oracle)?;

    let d = &curve.data;
    let num = d.g4.mul(&d.g4.mul_i64(5).sub(&d.big_g2.mul(&d.big_g2)));
    let den = d
        .g4
        .mul(&d.g4)
        .mul(&d.g4)
        .mul_i64(20)
        .sub(&d.g6.mul(&d.g6).mul_i64(49))
        .mul_i64(30);
    let closed = num.div(&den).map_err(CoreError::Algebra)?.mul(&curve.scale);

    let g2form = d
        .g2
        .mul(&d.g2.sub(&d.big_g2.mul(&d.big_g2).mul_i64(12)))
        .div(&d.delta.mul_i64(2))
        .map_err(CoreError::Algebra)?
        .mul(&curve.scale);

    let mut agg = DevAgg::new();
    agg.push(&cycle, &closed);
    agg.push(&g2form, &closed);
    if curve.special {
        agg.push(&cycle, &ApComplex::zero());
    }
    Ok(agg.into_report(
        "cycle-integral closed form".to_string(),
        format!("{}, digits = {}", curve_desc(curve), cfg.digits),
        cfg.tolerance,
    ))
}

/// The three auxiliary A-cycle integrals with rational closed forms,
///   ∮ dz/℘′² = λ(18g₃ − 12G₂g₂)/(2Δ),
///   ∮ ℘/℘′² dz = λ(18G₂g₃ − g₂²)/(2Δ),
///   ∮ ℘ dz = −λG₂,
/// plus the pointwise double-angle split
/// P₂(2z) = G₂ − 2℘(z) + (℘″(z)/℘′(z))²/4 that ties the main cycle
/// integral to them.
pub fn check_appendix_b(curve: &NumericCurve, cfg: &IdentityConfig) -> Result<CheckReport> {
    let ctx = RecursionContext::numeric(curve);
    let trunc: i64 = 4;
    let d = &curve.data;
    let half_poles = [PolePoint::Half(1), PolePoint::Half(2), PolePoint::Half(3)];
    let two_delta_inv = d.delta.mul_i64(2).inv().map_err(CoreError::Algebra)?;

    let mut agg = DevAgg::new();

    let inv_exp: Vec<LaurentSeries<ApComplex>> = (1..=3u8)
        .map(|a| {
            ctx.inv_two_wp_prime_sq(a, trunc, SeriesPoint::HalfPeriod(a))
                .scale_ratio(2, 1)
        })
        .collect();
    let eval_x = |z: &ApComplex| -> Result<ApComplex> {
        let dp = wp_prime(curve, z)?;
        dp.mul(&dp).inv().map_err(CoreError::Algebra)
    };
    let expand_x = |i: usize| -> Result<LaurentSeries<ApComplex>> { Ok(inv_exp[i].clone()) };
    let x_cycle = a_period(
        curve,
        &reduce_to_basis(curve, &half_poles, &expand_x, &eval_x)?,
    );
    let x_closed = d
        .g3
        .mul_i64(18)
        .sub(&d.big_g2.mul(&d.g2).mul_i64(12))
        .mul(&two_delta_inv)
        .mul(&curve.scale);
    oracle_gate(&x_cycle, &a_quadrature(curve, &eval_x, 1e-11)?)?;
    agg.push(&x_cycle, &x_closed);

    let wp_over: Vec<LaurentSeries<ApComplex>> = {
        let mut v = Vec::new();
        for a in 1..=3u8 {
            let point = SeriesPoint::HalfPeriod(a);
            let e_a = d.e[a as usize - 1].clone();
            let wp = crate::elliptic::wp_expand_at_halfperiod(a, &e_a, &d.g2, trunc + 2)
                .with_point(point);
            v.push(
                wp.mul(&ctx.inv_two_wp_prime_sq(a, trunc, point))
                    .scale_ratio(2, 1),
            );
        }
        v
    };
    let eval_y = |z: &ApComplex| -> Result<ApComplex> {
        let wp = curve.p_eval(PKind::Wp, z)?;
        let dp = wp_prime(curve, z)?;
        wp.div(&dp.mul(&dp)).map_err(CoreError::Algebra)
    };
    let expand_y = |i: usize| -> Result<LaurentSeries<ApComplex>> { Ok(wp_over[i].clone()) };
    let y_cycle = a_period(
        curve,
        &reduce_to_basis(curve, &half_poles, &expand_y, &eval_y)?,
    );
    let y_closed = d
        .big_g2
        .mul(&d.g3)
        .mul_i64(18)
        .sub(&d.g2.mul(&d.g2))
        .mul(&two_delta_inv)
        .mul(&curve.scale);
    oracle_gate(&y_cycle, &a_quadrature(curve, &eval_y, 1e-11)?)?;
    agg.push(&y_cycle, &y_closed);

    let origin_pole = [PolePoint::Marked(ApComplex::zero())];
    let wp_series = crate::elliptic::wp_expand_at_zero(&d.g2, &d.g3, trunc)
        .with_point(SeriesPoint::Marked(0));
    let eval_p = |z: &ApComplex| -> Result<ApComplex> { curve.p_eval(PKind::Wp, z) };
    let expand_p = |_: usize| -> Result<LaurentSeries<ApComplex>> { Ok(wp_series.clone()) };
    let p_cycle = a_period(
        curve,
        &reduce_to_basis(curve, &origin_pole, &expand_p, &eval_p)?,
    );
    let p_closed = d.big_g2.neg().mul(&curve.scale);
    oracle_gate(&p_cycle, &a_quadrature(curve, &eval_p, 1e-11)?)?;
    agg.push(&p_cycle, &p_closed);

    for z in &sample_points(curve, cfg.samples, cfg.seed ^ 0xb00c) {
        let lhs = p2m(curve, 0, &z.mul_i64(2))?;
        let wp = curve.p_eval(PKind::Wp, z)?;
        let dp = wp_prime(curve, z)?;
        let ddp = p2m(curve, 2, z)?;
        let ratio = ddp.div(&dp).map_err(CoreError::Algebra)?;
        let rhs = d
            .big_g2
            .sub(&wp.mul_i64(2))
            .add(&ratio.mul(&ratio).div_i64(4));
        agg.push(&lhs, &rhs);
    }

    Ok(agg.into_report(
        "auxiliary cycle integrals".to_string(),
        format!(
            "{}, digits = {}, samples = {}",
            curve_desc(curve),
            cfg.digits,
            cfg.samples
        ),
        cfg.tolerance,
    ))
}

fn oracle_gate(value: &ApComplex, oracle: &ApComplex) -> Result<()> {
    let dev = value.sub(oracle).abs_f64() / value.abs_f64().max(oracle.abs_f64()).max(1.0);
    if dev <= 1e-9 {
        Ok(())
    } else {
        Err(CoreError::Domain(format!(
            "cycle integral disagrees with the quadrature oracle: {:.3e} relative",
            dev
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(digits: u32, level: u32) -> (NumericCurve, CorrelationTable<ApComplex>) {
        let tau = ApComplex::from_f64_pair(0.3, 1.2);
        let curve = NumericCurve::general(tau, digits).unwrap();
        let ctx = RecursionContext::numeric(&curve);
        let table = run_to_level(&ctx, level).unwrap();
        (curve, table)
    }

    #[test]
    fn sample_points_stay_clear_of_each_other_and_of_the_half_lattice() {
        let (curve, _) = setup(16, 1);
        let pts = sample_points(&curve, 6, 42);
        assert_eq!(pts.len(), 6);
        for (i, p) in pts.iter().enumerate() {
            for q in pts.iter().skip(i + 1) {
                assert!(p.sub(q).abs_f64() > 1e-3);
            }
            for a in 1..=3u8 {
                assert!(crate::basis::lattice_dist(&curve, p, &curve.half_period(a)) > 0.05);
            }
            assert!(crate::basis::lattice_dist(&curve, p, &ApComplex::zero()) > 0.05);
        }
    }

    #[test]
    fn paired_simple_pole_subtraction_integrates_to_minus_two_pi_i() {
        let (curve, _) = setup(16, 1);
        let p = sample_points(&curve, 1, 7)[0].clone();
        let f = |z: &ApComplex| -> Result<ApComplex> {
            Ok(curve
                .p_eval(PKind::P1, &z.sub(&p))?
                .sub(&curve.p_eval(PKind::P1, &z.add(&p))?))
        };
        let got = a_quadrature(&curve, &f, 1e-11).unwrap();
        let want = ApComplex::two_pi_i(16).neg();
        assert!(got.sub(&want).abs_f64() < 1e-9, "got {:?}", got);
    }

    #[test]
    fn one_holed_torus_cycle_integral_matches_the_quadrature() {
        let (curve, table) = setup(16, 1);
        let b = b_loop_integral(&curve, &table, 1, 0, &[]).unwrap();
        let q = b_loop_quadrature(&curve, &table, 1, 0, &[], 1e-11).unwrap();
        assert!(b.sub(&q).abs_f64() < 1e-9 * b.abs_f64().max(1.0));
    }

    #[test]
    fn three_holed_sphere_cycle_integral_matches_the_quadrature() {
        let (curve, table) = setup(16, 1);
        let specs = sample_points(&curve, 2, 5);
        let b = b_loop_integral(&curve, &table, 0, 2, &specs).unwrap();
        let q = b_loop_quadrature(&curve, &table, 0, 2, &specs, 1e-11).unwrap();
        assert!(
            b.sub(&q).abs_f64() < 1e-8 * b.abs_f64().max(1.0),
            "reduction {:?} vs quadrature {:?}",
            b,
            q
        );
    }

    #[test]
    fn bilinear_closure_holds_with_either_base_point() {
        let (curve, table) = setup(30, 2);
        let pts = sample_points(&curve, 3, 23);
        let specs = vec![pts[0].clone()];
        let z0 = pts[1].clone();
        let (g, n) = (1u32, 1u32);
        let b = b_loop_integral(&curve, &table, g, n, &specs).unwrap();

        for alpha in [pts[2].clone(), pts[2].neg().add(&curve.half_period(1))] {
            let u = |z: &ApComplex| -> ApComplex {
                curve
                    .p_eval(PKind::P1, &z.sub(&z0))
                    .unwrap()
                    .sub(&curve.p_eval(PKind::P1, &alpha.sub(&z0)).unwrap())
            };
            let du =
                |z: &ApComplex| -> ApComplex { curve.p_eval(PKind::P2m(0), &z.sub(&z0)).unwrap() };
            let f_z0 = r2w_at(&curve, &table, g, &z0, &specs)
                .unwrap()
                .mul(&inv_two_wp_prime_sq_at(&curve, &z0).unwrap());
            let mut w_args = vec![z0.clone()];
            w_args.extend_from_slice(&specs);
            let mut total = w_eval(&curve, table.get(g, n + 1).unwrap(), &w_args).unwrap();
            total = total.add(&f_z0.neg());
            let two_pi_i = ApComplex::two_pi_i(30);
            for (i, zi) in specs.iter().enumerate() {
                let (h, r) = marked_pole_data(&curve, &table, g, &specs, i).unwrap();
                let at_plus = u(zi).mul(&r).add(&du(zi).mul(&h));
                let at_minus = u(&zi.neg()).mul(&r).neg().add(&du(&zi.neg()).mul(&h));
                total = total
                    .add(&at_plus)
                    .add(&at_minus)
                    .sub(&two_pi_i.mul(&r));
            }
            total = total.sub(&b);
            assert!(
                total.abs_f64() < 1e-24 * b.abs_f64().max(1.0),
                "closure residual {:.3e}",
                total.abs_f64()
            );
        }
    }

    #[test]
    fn pole_check_fails_once_the_completion_terms_are_dropped() {
        let (curve, table) = setup(16, 2);
        let ctx = RecursionContext::numeric(&curve);
        let entry = table.get(1, 2).unwrap();
        let specs = sample_points(&curve, 1, 3);
        let (ok, scale_ok) =
            q2_principal_parts(&curve, &ctx, &table, entry, 1, 1, 1, &specs, true).unwrap();
        assert!(scale_ok > 0.0);
        assert!(
            ok.abs_f64() < 1e-8 * scale_ok,
            "worst {:.3e} scale {:.3e}",
            ok.abs_f64(),
            scale_ok
        );
        let (bad, scale_bad) =
            q2_principal_parts(&curve, &ctx, &table, entry, 1, 1, 1, &specs, false).unwrap();
        assert!(
            bad.abs_f64() > 1e-2 * scale_bad,
            "bad {:.3e} scale {:.3e}",
            bad.abs_f64(),
            scale_bad
        );
    }

    #[test]
    fn reflected_and_cycle_integral_forms_differ_by_the_tower_terms() {
        let (curve, table) = setup(30, 2);
        let pts = sample_points(&curve, 2, 17);
        let specs = vec![pts[0].clone()];
        let z = &pts[1];
        let (g, n) = (1u32, 1u32);

        let (mess_residual, scale) = loop_row_residual(&curve, &table, g, z, &specs).unwrap();
        assert!(mess_residual.abs_f64() < 1e-24 * scale.max(1.0));

        let mut args0 = vec![ApComplex::zero()];
        args0.extend_from_slice(&specs);
        let w_at_zero = cor_eval(&curve, &table, g, &args0).unwrap();
        let b = b_loop_integral(&curve, &table, g, n, &specs).unwrap();
        let dd = tower_derivative_term(&curve, &table, g, &specs, 0).unwrap();
        let alt_residual = mess_residual
            .sub(&w_at_zero.mul_i64(2))
            .sub(&dd.mul_i64(2))
            .add(&b.mul_i64(2));
        assert!(
            alt_residual.abs_f64() < 1e-24 * scale.max(1.0),
            "residual {:.3e}",
            alt_residual.abs_f64()
        );
    }

    #[test]
    fn special_curve_one_holed_torus_cycle_integral_vanishes_exactly() {
        use wtr_algebra::GammaField;
        let ctx = RecursionContext::<GammaField>::exact_special();
        let table = run_to_level(&ctx, 1).unwrap();
        let entry = table.get(1, 1).unwrap();
        let half = GammaField::from_i64(2).inv().unwrap();
        let mut total = GammaField::zero();
        for t in &entry.terms {
            let f = &t.factors[0];
            let e_a = ctx.data.e[f.pole as usize - 1].clone();
            let value = match f.m {
                0 => e_a.add(&ctx.data.big_g2),
                2 => e_a.mul(&e_a).mul_i64(6).sub(&ctx.data.g2.mul(&half)),
                _ => panic!("unexpected derivative order {}", f.m),
            };
            total = total.add(&t.coeff.mul(&value));
        }
        assert!(total.is_zero(), "got {:?}", total);
    }

    #[test]
    fn tower_rows_pass_on_the_special_curve() {
        let curve = NumericCurve::special(40).unwrap();
        let ctx = RecursionContext::numeric(&curve);
        let table = run_to_level(&ctx, 2).unwrap();
        let cfg = IdentityConfig {
            samples: 2,
            ..IdentityConfig::new(40)
        };
        for (g, n) in [(1u32, 0u32), (0, 2), (1, 1)] {
            let report = check_identity_tower(&curve, &table, g, n, &cfg).unwrap();
            assert!(
                report.pass,
                "{}: rel dev {:.3e}",
                report.name, report.max_rel_dev
            );
        }
    }
}
