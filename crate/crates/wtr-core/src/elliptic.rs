//! Eisenstein series, Weierstrass functions, and Jacobi theta evaluation.
//!
//! Everything on the torus ℂ/(ℤ+τℤ) is expressed through the A-cycle
//! normalized second kind differential and its relatives
//!
//! ```text
//!   P₂(z)  = ℘(z) + G₂,            ∮_A P₂ dz = 0,   ∮_B P₂ dz = 2πi,
//!   P₁(z)  = −ζ(z) + G₂ z,         P₁′ = P₂,        P₁(z+τ) = P₁(z) + 2πi,
//!   P₂⁽ᵐ⁾  = m-th derivative of P₂.
//! ```
//!
//! Numeric evaluation uses the absolutely convergent bilateral q-series
//!
//! ```text
//!   P₂⁽ᵐ⁾(z) = (2πi)^{m+2} Σ_{n∈ℤ} A_m(w_n)/(1−w_n)^{m+2},  w_n = e^{2πiz} qⁿ,
//! ```
//!
//! with integer polynomials A_m generated by A₀ = w and
//! A_{m+1} = w·[A_m′·(1−w) + (m+2)A_m]. Local expansions come from the
//! coefficient recursion driven by ℘″ = 6℘² − g₂/2, generic over the
//! coefficient field so the same code serves floating point and exact
//! cyclotomic arithmetic.

use crate::{CoreError, Result};
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use wtr_algebra::{
    digits_to_bits, ensure_working_digits, AbelianGroup, ApComplex, CycOmega, Field, GammaField,
    LaurentSeries, Ring, SeriesPoint,
};

/// Which function of z to evaluate at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PKind {
    /// ℘(z)
    Wp,
    /// ℘′(z)
    WpPrime,
    /// ζ(z)
    Zeta,
    /// P₁(z) = −ζ(z) + G₂ z
    P1,
    /// P₂⁽ᵐ⁾(z), the m-th derivative of P₂ = ℘ + G₂
    P2m(u32),
}

/// Scaling weight: f(λz; λΛ) = λ^{-weight} f(z; Λ).
fn homogeneity_weight(kind: PKind) -> i64 {
    match kind {
        PKind::Wp => 2,
        PKind::WpPrime => 3,
        PKind::Zeta | PKind::P1 => 1,
        PKind::P2m(m) => m as i64 + 2,
    }
}

/// Evaluation context for the torus ℂ/(ℤ+τℤ) at a fixed precision.
#[derive(Clone, Debug)]
pub struct QSeriesContext {
    tau: ApComplex,
    q: ApComplex,
    digits: u32,
}

impl QSeriesContext {
    /// Requires Im τ > 0. `digits` is the target decimal accuracy; series
    /// are summed with guard digits beyond it.
    pub fn new(tau: ApComplex, digits: u32) -> Result<Self> {
        ensure_working_digits(digits + 15);
        if !(tau.im_f64() > 0.0) {
            return Err(CoreError::InvalidTau);
        }
        let two_pi_i = ApComplex::two_pi_i(digits + 15);
        let q = two_pi_i.mul(&tau).exp();
        Ok(QSeriesContext { tau, q, digits })
    }

    pub fn tau(&self) -> &ApComplex {
        &self.tau
    }

    pub fn q(&self) -> &ApComplex {
        &self.q
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    fn bits(&self) -> u32 {
        digits_to_bits(self.digits + 15)
    }

    /// Absolute floor below which series terms stop contributing.
    fn term_floor(&self) -> Float {
        Float::with_val(self.bits(), 10).pow(-(self.digits as i32) - 12)
    }

    /// Half period ω_a for a in 1..=3: ω₁ = 1/2, ω₂ = τ/2, ω₃ = −(1+τ)/2.
    pub fn half_period(&self, a: u8) -> ApComplex {
        match a {
            1 => ApComplex::from_ratio(1, 2),
            2 => self.tau.div_i64(2),
            3 => ApComplex::one().add(&self.tau).div_i64(2).neg(),
            _ => panic!("half period index {a} out of range 1..=3"),
        }
    }

    /// Reduce z into the fundamental strip |Im z/Im τ| ≤ 1/2, |Re| ≤ 1/2.
    /// Returns the reduced point and the number of τ steps removed, which
    /// is what P₁ needs to restore its quasi-period.
    pub fn strip_reduce(&self, z: &ApComplex) -> (ApComplex, i64) {
        let k = (z.im_f64() / self.tau.im_f64()).round();
        assert!(k.abs() < 9.0e15, "point too far from the fundamental strip");
        let k = k as i64;
        let mut red = z.sub(&self.tau.mul_i64(k));
        let j = red.re_f64().round();
        assert!(j.abs() < 9.0e15, "point too far from the fundamental strip");
        red = red.sub(&ApComplex::from_i64_pair(j as i64, 0));
        (red, k)
    }

    /// Eisenstein value G_w = Σ′_{λ∈Λ} λ^{-w} for even w ≥ 2, with the w = 2
    /// case summed in the standard row-first (quasi-modular) order.
    pub fn eisenstein(&self, weight: u32) -> Result<ApComplex> {
        assert!(weight >= 2 && weight % 2 == 0, "even weight >= 2 required");
        let bits = self.bits();
        match weight {
            2 | 4 | 6 => {
                // G_w = 2 ζ(w) E_w with the unit-constant q-expansions
                //   E₂ = 1 − 24 Σ σ₁(n) qⁿ,
                //   E₄ = 1 + 240 Σ σ₃(n) qⁿ,
                //   E₆ = 1 − 504 Σ σ₅(n) qⁿ.
                let (mult, sigma_pow, zeta2k) = match weight {
                    2 => (-24i64, 1u32, zeta_even(2, bits)),
                    4 => (240, 3, zeta_even(4, bits)),
                    6 => (-504, 5, zeta_even(6, bits)),
                    _ => unreachable!(),
                };
                let floor = self.term_floor();
                let mut sum = ApComplex::one();
                let mut qn = ApComplex::one();
                let mut small_streak = 0u32;
                let mut n = 1u64;
                loop {
                    qn = qn.mul(&self.q);
                    let s = sigma(n, sigma_pow, bits);
                    let term = qn.scale_float(&s).mul_i64(mult);
                    sum = sum.add(&term);
                    if term.abs() < floor {
                        small_streak += 1;
                    } else {
                        small_streak = 0;
                    }
                    if small_streak >= 2 && n >= 3 {
                        break;
                    }
                    n += 1;
                    assert!(n < 2_000_000, "Eisenstein series failed to converge");
                }
                Ok(sum.scale_float(&zeta2k).mul_i64(2))
            }
            _ => {
                // Higher weights follow from the expansion coefficients of ℘,
                // G_{2k+2} = c_k/(2k+1).
                let g4 = self.eisenstein(4)?;
                let g6 = self.eisenstein(6)?;
                let g2c = g4.mul_i64(60);
                let g3c = g6.mul_i64(140);
                let k = (weight as i64 - 2) / 2;
                let cs = wp_zero_coefficients(&g2c, &g3c, k as usize);
                Ok(cs[k as usize - 1].div_i64(2 * k + 1))
            }
        }
    }

    /// Evaluate ℘, ℘′, ζ, P₁, or P₂⁽ᵐ⁾ at z. Errors when z reduces to a
    /// lattice point.
    pub fn p_eval(&self, kind: PKind, z: &ApComplex) -> Result<ApComplex> {
        let (zr, tau_steps) = self.strip_reduce(z);
        match kind {
            PKind::P2m(m) => self.p2m_reduced(m, &zr),
            PKind::Wp => {
                let g2e = self.eisenstein(2)?;
                Ok(self.p2m_reduced(0, &zr)?.sub(&g2e))
            }
            PKind::WpPrime => self.p2m_reduced(1, &zr),
            PKind::P1 => {
                let p1 = self.p1_reduced(&zr)?;
                Ok(p1.add(&ApComplex::two_pi_i(self.digits + 15).mul_i64(tau_steps)))
            }
            PKind::Zeta => {
                let p1 = self.p_eval(PKind::P1, z)?;
                let g2e = self.eisenstein(2)?;
                Ok(g2e.mul(z).sub(&p1))
            }
        }
    }

    /// Bilateral sum for P₂⁽ᵐ⁾ at a strip-reduced point.
    fn p2m_reduced(&self, m: u32, zr: &ApComplex) -> Result<ApComplex> {
        let am = eulerian_poly(m);
        let floor = self.term_floor();
        let two_pi_i = ApComplex::two_pi_i(self.digits + 15);
        let w0 = two_pi_i.mul(zr).exp();
        let mut sum = rational_term(&am, m, &w0)?;
        let mut wp = w0.clone();
        let mut wm = w0;
        let mut small_streak = 0u32;
        let mut n = 1u64;
        loop {
            wp = wp.mul(&self.q);
            wm = wm.div(&self.q).map_err(CoreError::Algebra)?;
            let tp = rational_term(&am, m, &wp)?;
            let tm = rational_term(&am, m, &wm)?;
            sum = sum.add(&tp).add(&tm);
            let mag = {
                let a = tp.abs();
                let b = tm.abs();
                if b > a {
                    b
                } else {
                    a
                }
            };
            if mag < floor {
                small_streak += 1;
            } else {
                small_streak = 0;
            }
            if small_streak >= 2 && n >= 3 {
                break;
            }
            n += 1;
            assert!(n < 1_000_000, "P2 series failed to converge");
        }
        Ok(sum.mul(&two_pi_i.powi(m as i64 + 2).map_err(CoreError::Algebra)?))
    }

    /// P₁ at a strip-reduced point:
    /// P₁ = πi(1+w₀)/(1−w₀) + 2πi Σ_{n≥1} [ w₀qⁿ/(1−w₀qⁿ) − w₀⁻¹qⁿ/(1−w₀⁻¹qⁿ) ].
    fn p1_reduced(&self, zr: &ApComplex) -> Result<ApComplex> {
        let floor = self.term_floor();
        let two_pi_i = ApComplex::two_pi_i(self.digits + 15);
        let w0 = two_pi_i.mul(zr).exp();
        let one = ApComplex::one();
        let denom = one.sub(&w0);
        if denom.abs_f64() < 1e-8 {
            return Err(CoreError::LatticePoint);
        }
        let pi_i = two_pi_i.div_i64(2);
        let mut sum = pi_i
            .mul(&one.add(&w0))
            .div(&denom)
            .map_err(CoreError::Algebra)?;
        let mut wp = w0.clone();
        let mut wm = w0.inv().map_err(CoreError::Algebra)?;
        let mut small_streak = 0u32;
        let mut n = 1u64;
        loop {
            wp = wp.mul(&self.q);
            wm = wm.mul(&self.q);
            let dp = one.sub(&wp);
            let dm = one.sub(&wm);
            if dp.abs_f64() < 1e-8 || dm.abs_f64() < 1e-8 {
                return Err(CoreError::LatticePoint);
            }
            let tp = wp.div(&dp).map_err(CoreError::Algebra)?;
            let tm = wm.div(&dm).map_err(CoreError::Algebra)?;
            let term = tp.sub(&tm).mul(&two_pi_i);
            sum = sum.add(&term);
            if term.abs() < floor {
                small_streak += 1;
            } else {
                small_streak = 0;
            }
            if small_streak >= 2 && n >= 3 {
                break;
            }
            n += 1;
            assert!(n < 1_000_000, "P1 series failed to converge");
        }
        Ok(sum)
    }

    /// d-th derivative of the odd theta function
    /// θ(z) = 2 Σ_{n≥0} (−1)ⁿ e^{iπτ(n+1/2)²} sin((2n+1)πz),
    /// normalized so θ′(0) = 2πη³, computed after reducing z by the
    /// quasi-periods θ(z+1) = −θ(z) and θ(z+τ) = −q^{-1/2} e^{-2πiz} θ(z).
    pub fn theta_deriv(&self, d: u32, z: &ApComplex) -> ApComplex {
        assert!(d <= 16, "theta derivative order {d} out of supported range");
        let (zr, b) = self.strip_reduce(z);
        let base = self.theta_strip_derivs(d, &zr);
        if b == 0 && z.sub(&zr).abs_f64() < 1e-300 {
            return base[d as usize].clone();
        }
        // z = zr + j + bτ with integers j, b. With
        // μ(u) = (−1)^{j+b} q^{-b²/2} e^{-2πibu} one has θ(u + j + bτ) = μ(u)θ(u),
        // hence θ⁽ᵈ⁾(z) = Σ_e C(d,e) μ^{(d−e)}(zr) θ⁽ᵉ⁾(zr) with
        // μ^{(k)} = (−2πib)^k μ.
        let j = z.sub(&zr).sub(&self.tau.mul_i64(b)).re_f64().round() as i64;
        let two_pi_i = ApComplex::two_pi_i(self.digits + 15);
        let pi_i = two_pi_i.div_i64(2);
        // q^{-b²/2} = e^{-πiτb²}
        let qfac = pi_i.mul(&self.tau).mul_i64(-(b * b)).exp();
        let efac = two_pi_i.mul(&zr).mul_i64(-b).exp();
        let sign = if (j + b) % 2 == 0 { 1 } else { -1 };
        let mu = qfac.mul(&efac).mul_i64(sign);
        let dzmu = two_pi_i.mul_i64(-b);
        let mut out = ApComplex::zero();
        let mut binom: i64 = 1;
        for e in 0..=d {
            if e > 0 {
                binom = binom * (d - e + 1) as i64 / e as i64;
            }
            let k = (d - e) as i64;
            let mu_k = mu.mul(&dzmu.powi(k).expect("nonnegative power"));
            out = out.add(&mu_k.mul(&base[e as usize]).mul_i64(binom));
        }
        out
    }

    fn theta_strip_derivs(&self, d: u32, zr: &ApComplex) -> Vec<ApComplex> {
        let bits = self.bits();
        let floor = self.term_floor();
        let pi = ApComplex::pi(self.digits + 15);
        let pi_i = ApComplex::two_pi_i(self.digits + 15).div_i64(2);
        let mut out = vec![ApComplex::zero(); d as usize + 1];
        let mut small_streak = 0u32;
        let mut n: i64 = 0;
        loop {
            // 2(−1)ⁿ e^{iπτ(n+1/2)²} sin((2n+1)πz); the e-th termwise
            // derivative replaces sin(u) by ((2n+1)π)^e sin(u + eπ/2).
            let np = ApComplex::from_i64_pair(2 * n + 1, 0).div_i64(2);
            let parity = if n % 2 == 0 { 2 } else { -2 };
            let expo = pi_i.mul(&self.tau).mul(&np).mul(&np).exp().mul_i64(parity);
            let u = pi.mul(zr).mul_i64(2 * n + 1);
            let rate = pi.mul_i64(2 * n + 1);
            let mut max_mag = Float::new(bits);
            for (e, slot) in out.iter_mut().enumerate() {
                let shifted = u.add(&pi.mul_i64(e as i64).div_i64(2));
                let term = expo
                    .mul(&sin_c(&shifted))
                    .mul(&rate.powi(e as i64).expect("nonnegative power"));
                let m = term.abs();
                if m > max_mag {
                    max_mag = m;
                }
                *slot = slot.add(&term);
            }
            if max_mag < floor {
                small_streak += 1;
            } else {
                small_streak = 0;
            }
            if small_streak >= 2 && n >= 3 {
                break;
            }
            n += 1;
            assert!(n < 100_000, "theta series failed to converge");
        }
        out
    }
}

/// sin of a complex number via (e^{iu} − e^{-iu})/(2i).
fn sin_c(u: &ApComplex) -> ApComplex {
    let iu = ApComplex::i().mul(u);
    let num = iu.exp().sub(&iu.neg().exp());
    num.div(&ApComplex::i().mul_i64(2)).expect("2i is invertible")
}

/// ζ(w) for even w as closed forms: π²/6, π⁴/90, π⁶/945.
fn zeta_even(w: u32, bits: u32) -> Float {
    let pi = Float::with_val(bits, Constant::Pi);
    match w {
        2 => pi.pow(2) / 6u32,
        4 => pi.pow(4) / 90u32,
        6 => pi.pow(6) / 945u32,
        _ => panic!("zeta_even only covers weights 2, 4, 6"),
    }
}

/// Divisor power sum σ_k(n) as a Float at the given width.
fn sigma(n: u64, k: u32, bits: u32) -> Float {
    let mut acc = rug::Integer::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            acc += rug::Integer::from(d).pow(k);
            let e = n / d;
            if e != d {
                acc += rug::Integer::from(e).pow(k);
            }
        }
        d += 1;
    }
    Float::with_val(bits, &acc)
}

/// A_m(w)/(1−w)^{m+2} with A_m from [`eulerian_poly`].
fn rational_term(am: &[i64], m: u32, w: &ApComplex) -> Result<ApComplex> {
    // Horner for A_m(w) = w·(a₁ + a₂ w + … + a_{m+1} w^m).
    let mut num = ApComplex::zero();
    for &a in am.iter().rev() {
        num = num.mul(w).add(&ApComplex::from_i64_pair(a, 0));
    }
    num = num.mul(w);
    let d = ApComplex::one().sub(w);
    if d.abs_f64() < 1e-8 {
        return Err(CoreError::LatticePoint);
    }
    let dp = d.powi(m as i64 + 2).map_err(CoreError::Algebra)?;
    num.div(&dp).map_err(CoreError::Algebra)
}

/// Coefficients [a₁, …, a_{m+1}] of A_m(w) = Σ a_j w^j, defined by A₀ = w and
/// A_{m+1} = w·[A_m′·(1−w) + (m+2)A_m], so that
/// (w d/dw)^m [w/(1−w)²] = A_m(w)/(1−w)^{m+2}. The coefficients are Eulerian
/// numbers and stay within i64 for every order supported here.
fn eulerian_poly(m: u32) -> Vec<i64> {
    assert!(m <= 20, "A_m coefficients exceed i64 beyond m = 20");
    let mut a: Vec<i64> = vec![1];
    for step in 0..m as i64 {
        let deg = a.len();
        let mut b = vec![0i64; deg + 1];
        for (idx, slot) in b.iter_mut().enumerate() {
            let j = idx as i64 + 1;
            let aj = if idx < deg { a[idx] } else { 0 };
            let ajm1 = if idx >= 1 { a[idx - 1] } else { 0 };
            // coefficient of w^j in w·[A′(1−w) + (step+2)A]:
            // j·a_j + (step+3−j)·a_{j−1}
            *slot = j
                .checked_mul(aj)
                .and_then(|x| x.checked_add((step + 3 - j).checked_mul(ajm1)?))
                .expect("A_m coefficient overflow");
        }
        a = b;
    }
    a
}

/// Laurent coefficients c₁..c_K of ℘(t) = t⁻² + Σ_{k≥1} c_k t^{2k}:
/// c₁ = g₂/20, c₂ = g₃/28, and for k ≥ 3
/// c_k = 3/((2k+3)(k−2)) Σ_{i=1}^{k−2} c_i c_{k−1−i}.
pub fn wp_zero_coefficients<C: Field>(g2: &C, g3: &C, count: usize) -> Vec<C> {
    let mut c: Vec<C> = Vec::with_capacity(count);
    if count >= 1 {
        c.push(g2.div(&C::from_i64(20)).expect("20 is invertible"));
    }
    if count >= 2 {
        c.push(g3.div(&C::from_i64(28)).expect("28 is invertible"));
    }
    for k in 3..=count {
        let mut s = C::zero();
        for i in 1..=k - 2 {
            s = s.add(&c[i - 1].mul(&c[k - 1 - i - 1]));
        }
        let den = ((2 * k + 3) * (k - 2)) as i64;
        c.push(
            s.mul_i64(3)
                .div(&C::from_i64(den))
                .expect("positive denominator"),
        );
    }
    c
}

/// ℘ expanded at the origin: t⁻² + Σ c_k t^{2k}, valid to O(t^trunc).
pub fn wp_expand_at_zero<C: Field>(g2: &C, g3: &C, trunc: i64) -> LaurentSeries<C> {
    let kmax = if trunc <= 0 {
        0
    } else {
        ((trunc - 1) / 2) as usize
    };
    let cs = wp_zero_coefficients(g2, g3, kmax);
    let len = (trunc + 2).max(0) as usize;
    let mut coeffs = vec![C::zero(); len];
    if len > 0 {
        coeffs[0] = C::one();
    }
    for (k, ck) in cs.iter().enumerate() {
        let idx = 2 * (k + 1) + 2;
        if idx < len {
            coeffs[idx] = ck.clone();
        }
    }
    LaurentSeries::from_coeffs(SeriesPoint::Origin, -2, coeffs, trunc)
}

/// Taylor series of ℘ at a regular point b from the seeds ℘(b), ℘′(b):
/// a₀ = ℘(b), a₁ = ℘′(b), and
/// (m+2)(m+1) a_{m+2} = 6 Σ_{i≤m} a_i a_{m−i} − (g₂/2) δ_{m,0}.
pub fn wp_taylor_at<C: Field>(
    point: SeriesPoint,
    wp_b: &C,
    wp_prime_b: &C,
    g2: &C,
    trunc: i64,
) -> LaurentSeries<C> {
    let len = trunc.max(0) as usize;
    let mut a: Vec<C> = Vec::with_capacity(len);
    if len >= 1 {
        a.push(wp_b.clone());
    }
    if len >= 2 {
        a.push(wp_prime_b.clone());
    }
    for m in 0..len.saturating_sub(2) {
        let mut s = C::zero();
        for i in 0..=m {
            s = s.add(&a[i].mul(&a[m - i]));
        }
        let mut rhs = s.mul_i64(6);
        if m == 0 {
            rhs = rhs.sub(&g2.div(&C::from_i64(2)).expect("2 is invertible"));
        }
        let den = ((m + 2) * (m + 1)) as i64;
        a.push(rhs.div(&C::from_i64(den)).expect("positive denominator"));
    }
    LaurentSeries::from_coeffs(point, 0, a, trunc)
}

/// Even Taylor series of ℘ at the half period ω_a, seeded by e_a = ℘(ω_a)
/// where ℘′ vanishes.
pub fn wp_expand_at_halfperiod<C: Field>(a: u8, e_a: &C, g2: &C, trunc: i64) -> LaurentSeries<C> {
    let s = wp_taylor_at(SeriesPoint::HalfPeriod(a), e_a, &C::zero(), g2, trunc);
    debug_assert!(s.is_even_in_arg(), "℘ must be even at a half period");
    s
}

/// Curve constants over the scalar domain C.
#[derive(Clone, Debug)]
pub struct CurveData<C: Field> {
    /// g₂ with y² = 4x³ − g₂x − g₃.
    pub g2: C,
    pub g3: C,
    /// Eisenstein G₂ (quasi-modular weight 2).
    pub big_g2: C,
    pub g4: C,
    pub g6: C,
    /// Discriminant g₂³ − 27 g₃².
    pub delta: C,
    /// e_a = ℘(ω_a) in the fixed half-period order ω₁, ω₂, ω₃.
    pub e: [C; 3],
}

/// Build curve constants from Eisenstein values on ℂ/(ℤ+τℤ).
pub fn curve_constants(ctx: &QSeriesContext) -> Result<CurveData<ApComplex>> {
    let big_g2 = ctx.eisenstein(2)?;
    let g4 = ctx.eisenstein(4)?;
    let g6 = ctx.eisenstein(6)?;
    let g2 = g4.mul_i64(60);
    let g3 = g6.mul_i64(140);
    let delta = g2
        .powi(3)
        .map_err(CoreError::Algebra)?
        .sub(&g3.mul(&g3).mul_i64(27));
    let mut e = [ApComplex::zero(), ApComplex::zero(), ApComplex::zero()];
    for a in 1..=3u8 {
        e[a as usize - 1] = ctx.p_eval(PKind::Wp, &ctx.half_period(a))?;
    }
    Ok(CurveData {
        g2,
        g3,
        big_g2,
        g4,
        g6,
        delta,
        e,
    })
}

/// Exact constants of the equianharmonic curve y² = 4x³ − 4 over ℚ(ω)(γ),
/// where γ stands for the lattice G₂ value. The branch points are the cube
/// roots of unity in the fixed half-period order e = (1, ω, ω²).
pub fn curve_constants_special_exact() -> CurveData<GammaField> {
    let om = GammaField::from_cyc(CycOmega::omega());
    let om2 = om.mul(&om);
    CurveData {
        g2: GammaField::zero(),
        g3: GammaField::from_i64(4),
        big_g2: GammaField::gen(),
        g4: GammaField::zero(),
        g6: GammaField::from_ratio(1, 35),
        delta: GammaField::from_i64(-432),
        e: [GammaField::one(), om, om2],
    }
}

/// A torus with all numeric evaluation routed through one struct: either
/// ℤ+τℤ itself (scale 1) or the rescaled equianharmonic lattice λ(ℤ+τ₀ℤ)
/// on which y² = 4x³ − 4.
#[derive(Clone, Debug)]
pub struct NumericCurve {
    pub ctx: QSeriesContext,
    /// Lattice scale λ; the working lattice is λ(ℤ+τℤ).
    pub scale: ApComplex,
    pub data: CurveData<ApComplex>,
    pub special: bool,
}

impl NumericCurve {
    pub fn general(tau: ApComplex, digits: u32) -> Result<Self> {
        let ctx = QSeriesContext::new(tau, digits)?;
        let data = curve_constants(&ctx)?;
        Ok(NumericCurve {
            ctx,
            scale: ApComplex::one(),
            data,
            special: false,
        })
    }

    /// The equianharmonic curve: τ₀ = e^{2πi/3}, λ = (g₃(τ₀)/4)^{1/6} chosen
    /// real positive, so that on λ(ℤ+τ₀ℤ) the invariants are g₂ = 0, g₃ = 4.
    pub fn special(digits: u32) -> Result<Self> {
        ensure_working_digits(digits + 15);
        let bits = digits_to_bits(digits + 15);
        let re = Float::with_val(bits, -0.5f64);
        let im = Float::with_val(bits, 3u32).sqrt() / 2u32;
        let tau0 = ApComplex::from_parts(re, im);
        let ctx = QSeriesContext::new(tau0, digits)?;
        let base = curve_constants(&ctx)?;
        let lambda = base.g3.div_i64(4).root(6).map_err(CoreError::Algebra)?;
        assert!(
            lambda.im_f64().abs() < 1e-10 && lambda.re_f64() > 0.0,
            "lattice scale must come out real positive"
        );
        let l2 = lambda.mul(&lambda).inv().map_err(CoreError::Algebra)?;
        let l4 = l2.mul(&l2);
        let l6 = l4.mul(&l2);
        let om = omega_numeric(digits);
        let data = CurveData {
            g2: base.g2.mul(&l4),
            g3: base.g3.mul(&l6),
            big_g2: base.big_g2.mul(&l2),
            g4: base.g4.mul(&l4),
            g6: base.g6.mul(&l6),
            delta: base.delta.mul(&l6).mul(&l6),
            e: [
                base.e[0].mul(&l2),
                base.e[1].mul(&l2),
                base.e[2].mul(&l2),
            ],
        };
        // The scaled branch points are exactly the cube roots of unity in
        // half-period order; asserting it here pins that labeling everywhere.
        let tol = 1e-12f64;
        assert!(data.g3.sub(&ApComplex::from_i64_pair(4, 0)).abs_f64() < tol);
        assert!(data.g2.abs_f64() < tol, "g2 must vanish on this curve");
        assert!(data.e[0].sub(&ApComplex::one()).abs_f64() < tol);
        assert!(data.e[1].sub(&om).abs_f64() < tol);
        assert!(data.e[2].sub(&om.mul(&om)).abs_f64() < tol);
        Ok(NumericCurve {
            ctx,
            scale: lambda,
            data,
            special: true,
        })
    }

    pub fn digits(&self) -> u32 {
        self.ctx.digits()
    }

    /// Half period of the working lattice.
    pub fn half_period(&self, a: u8) -> ApComplex {
        self.ctx.half_period(a).mul(&self.scale)
    }

    /// A and B periods of the working lattice.
    pub fn periods(&self) -> (ApComplex, ApComplex) {
        (self.scale.clone(), self.scale.mul(self.ctx.tau()))
    }

    /// Evaluate on the working lattice, unscaling through the homogeneity
    /// f(λz; λΛ) = λ^{-w} f(z; Λ).
    pub fn p_eval(&self, kind: PKind, u: &ApComplex) -> Result<ApComplex> {
        if !self.special {
            return self.ctx.p_eval(kind, u);
        }
        let z = u.div(&self.scale).map_err(CoreError::Algebra)?;
        let raw = self.ctx.p_eval(kind, &z)?;
        let w = homogeneity_weight(kind);
        Ok(raw.mul(&self.scale.powi(-w).map_err(CoreError::Algebra)?))
    }

    /// Local Taylor data of ℘ at a regular point of the working lattice,
    /// seeded from the closed evaluations.
    pub fn wp_taylor_at(
        &self,
        point: SeriesPoint,
        b: &ApComplex,
        trunc: i64,
    ) -> Result<LaurentSeries<ApComplex>> {
        let p0 = self.p_eval(PKind::Wp, b)?;
        let p1 = self.p_eval(PKind::WpPrime, b)?;
        Ok(wp_taylor_at(point, &p0, &p1, &self.data.g2, trunc))
    }
}

/// ω = e^{2πi/3} at the working precision.
pub fn omega_numeric(digits: u32) -> ApComplex {
    let bits = digits_to_bits(digits + 15);
    let re = Float::with_val(bits, -0.5f64);
    let im = Float::with_val(bits, 3u32).sqrt() / 2u32;
    ApComplex::from_parts(re, im)
}
