//! Eisenstein-part closed forms for the identity form I_k.
//!
//! k ≡ 0 mod 4 (k ≤ 8): c ζ(w) ζ(w − k/2 + 1) P(2^{-w}), w = ks/2;
//! k ≡ 2 mod 4 (k ≤ 6): c [χ₋₄(k/2) ζ(w) L(w − k/2 + 1) + 2^{k/2−1} L(w) ζ(w − k/2 + 1)];
//! odd k: a sum over fundamental discriminants, up to an unknown constant.
//!
//! The constants are fitted against the lattice at Re s = 2, rounded to small
//! rationals, and checked against r_k(n) before use.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::accum::CAcc;
use crate::epstein;
use crate::error::{Error, Result};
use crate::exec;
use crate::forms::identity;
use crate::lattice::representation_counts;
use crate::specfun::{dirichlet_l, kronecker_raw, riemann_zeta};

/// Largest accepted relative residual of a fit.
pub const FIT_TOL: f64 = 1e-8;
/// Largest accepted condition number of the column-scaled design matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Number of Dirichlet coefficients checked against r_k(n).
pub const COEFF_CHECK: usize = 64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn one() -> C {
    C::new(1.0, 0.0)
}

/// 2^{-z}.
fn pow2_neg(z: C) -> C {
    (-z * std::f64::consts::LN_2).exp()
}

/// E(I₄, s) = 8 (1 − 4^{1−2s}) ζ(2s) ζ(2s − 1).
///
/// At s = 1/2 the factor 1 − 4^{1−2s} cancels the pole of ζ(2s); near that
/// point a first-order expansion replaces the product.
pub fn closed_form_k4(s: C) -> Result<C> {
    if (s - one()).norm() == 0.0 {
        return Err(Error::PoleAt1);
    }
    let u = s * 2.0 - one();
    if u.norm() < 1e-6 {
        let l4 = 4f64.ln();
        let a = C::new(l4, 0.0) + u * (EULER_GAMMA * l4 - 0.5 * l4 * l4);
        let b = C::new(-0.5, 0.0) - u * (0.5 * (2.0 * std::f64::consts::PI).ln());
        return Ok(a * b * 8.0);
    }
    let f = one() - (-u * 4f64.ln()).exp();
    Ok(f * riemann_zeta(s * 2.0)? * riemann_zeta(u)? * 8.0)
}

/// Least-squares fit of oracle ≈ c · model · (1 + Σ_{j≥1} p_j x^j),
/// x = 2^{-ks/2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub k: usize,
    pub c: C,
    /// Polynomial coefficients, `poly[0] = 1`.
    pub poly: Vec<C>,
    /// |fit − oracle| / |oracle| per sample.
    pub residuals: Vec<f64>,
    pub degree: usize,
}

impl FittedModel {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// P(x).
    pub fn poly_at(&self, x: C) -> C {
        self.poly.iter().rev().fold(C::new(0.0, 0.0), |acc, &p| acc * x + p)
    }

    /// Copy with c and the coefficients of P snapped to nearby rationals of
    /// denominator at most `max_den`; values with no such neighbour stay.
    pub fn rounded(&self, max_den: u64) -> FittedModel {
        let snap = |z: C| C::new(round_rational(z.re, max_den), round_rational(z.im, max_den));
        let mut out = self.clone();
        out.c = snap(self.c);
        out.poly = self.poly.iter().map(|&p| snap(p)).collect();
        out
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.c.im.abs() <= tol * self.c.norm() && self.poly.iter().all(|p| p.im.abs() <= tol * p.norm().max(1.0))
    }
}

/// Nearest p/q with q ≤ max_den within 1e-7 relative, else x itself.
pub fn round_rational(x: f64, max_den: u64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let tol = 1e-7 * x.abs().max(1.0);
    for q in 1..=max_den.max(1) {
        let p = (x * q as f64).round();
        if (p / q as f64 - x).abs() <= tol {
            return p / q as f64;
        }
    }
    x
}

pub fn fit_constants(oracle: &[(C, C)], model: &[(C, C)], degree: usize, k: usize) -> Result<FittedModel> {
    let n = oracle.len();
    if model.len() != n {
        return Err(Error::BadRange(format!("{n} oracle samples but {} model samples", model.len())));
    }
    if n < degree + 2 {
        return Err(Error::BadRange(format!("{n} samples cannot fit degree {degree}")));
    }
    for (o, m) in oracle.iter().zip(model) {
        if (o.0 - m.0).norm() > 1e-12 * o.0.norm().max(1.0) {
            return Err(Error::BadRange(format!("sample points differ: {} vs {}", o.0, m.0)));
        }
        if !(m.1.norm() > 0.0) || !m.1.is_finite() || !o.1.is_finite() {
            return Err(Error::DegenerateInput(format!("model value {} at s = {}", m.1, m.0)));
        }
    }
    let cols = degree + 1;
    let mut a = DMatrix::<C>::zeros(n, cols);
    let mut b = DMatrix::<C>::zeros(n, 1);
    for (i, ((s, o), (_, m))) in oracle.iter().zip(model).enumerate() {
        let x = pow2_neg(*s * (k as f64 / 2.0));
        let mut xp = one();
        for j in 0..cols {
            a[(i, j)] = *m * xp;
            xp *= x;
        }
        b[(i, 0)] = *o;
    }
    let scale: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, &sc) in scale.iter().enumerate() {
        if !(sc > 0.0) {
            return Err(Error::Singular(f64::INFINITY));
        }
        a.column_mut(j).iter_mut().for_each(|z| *z /= sc);
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Singular(cond));
    }
    let y = svd.solve(&b, 0.0).map_err(|e| Error::FitFailed(e.to_string()))?;
    let coef: Vec<C> = (0..cols).map(|j| y[(j, 0)] / scale[j]).collect();
    let c = coef[0];
    if !(c.norm() > 0.0) {
        return Err(Error::FitFailed("fitted constant vanishes".into()));
    }
    let poly: Vec<C> = coef.iter().map(|&z| z / c).collect();
    let mut fm = FittedModel { k, c, poly, residuals: Vec::with_capacity(n), degree };
    for ((s, o), (_, m)) in oracle.iter().zip(model) {
        let x = pow2_neg(*s * (k as f64 / 2.0));
        let fit = fm.c * *m * fm.poly_at(x);
        fm.residuals.push((fit - o).norm() / o.norm());
    }
    if fm.max_residual() > FIT_TOL {
        return Err(Error::FitFailed(format!("max residual {:e} at degree {degree}", fm.max_residual())));
    }
    Ok(fm)
}

/// Sample points s = 2 + 0.3 i j used for every fit.
pub fn fit_points() -> Vec<C> {
    (0..12).map(|j| C::new(2.0, 0.3 * j as f64)).collect()
}

fn lattice_oracle(k: usize) -> Result<Vec<(C, C)>> {
    let q = identity(k);
    fit_points()
        .into_iter()
        .map(|s| epstein::evaluate_direct(&q, s, 1e-12).map(|r| (s, r.value)))
        .collect()
}

fn sigma(m: u32, n: usize) -> f64 {
    (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(m as i32)).sum()
}

fn chi4(n: usize) -> f64 {
    match n % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    }
}

fn check_counts(k: usize, coeffs: &[f64]) -> Result<()> {
    let r = representation_counts(k, coeffs.len())?;
    for (i, &a) in coeffs.iter().enumerate() {
        let want = r.r(i + 1) as f64;
        if (a - want).abs() > 1e-9 * want.max(1.0) {
            return Err(Error::FitFailed(format!("coefficient n = {}: model {a}, r_{k}(n) = {want}", i + 1)));
        }
    }
    Ok(())
}

/// Dirichlet coefficients of c ζ(w) ζ(w − m) P(2^{-w}), m = k/2 − 1.
pub fn mod4_0_coefficients(fm: &FittedModel, n_max: usize) -> Vec<f64> {
    let m = (fm.k / 2 - 1) as u32;
    (1..=n_max)
        .map(|n| {
            let mut a = 0.0;
            for (j, p) in fm.poly.iter().enumerate() {
                let pj = 1usize << j;
                if n % pj == 0 {
                    a += p.re * sigma(m, n / pj);
                }
            }
            fm.c.re * a
        })
        .collect()
}

/// Dirichlet coefficients of c [χ₋₄(k/2) ζ(w) L(w − m) + 2^m L(w) ζ(w − m)].
pub fn mod4_2_coefficients(k: usize, c: f64, n_max: usize) -> Vec<f64> {
    let m = (k / 2 - 1) as i32;
    let lead = chi4(k / 2);
    let two_m = 2f64.powi(m);
    (1..=n_max)
        .map(|n| {
            let mut a = 0.0;
            for d in (1..=n).filter(|d| n % d == 0) {
                a += (d as f64).powi(m) * (lead * chi4(d) + two_m * chi4(n / d));
            }
            c * a
        })
        .collect()
}

fn cached<F: FnOnce() -> Result<FittedModel>>(key: usize, f: F) -> Result<FittedModel> {
    static CACHE: OnceLock<Mutex<HashMap<usize, FittedModel>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.lock().unwrap().get(&key) {
        return Ok(m.clone());
    }
    let m = f()?;
    cache.lock().unwrap().insert(key, m.clone());
    Ok(m)
}

fn mod4_0_base(k: usize, s: C) -> Result<C> {
    let w = s * (k as f64 / 2.0);
    Ok(riemann_zeta(w)? * riemann_zeta(w - (k as f64 / 2.0 - 1.0))?)
}

/// Fits c_k and P for k ∈ {4, 8}: the lowest degree ≤ 3 whose residual
/// passes, then rational rounding and the coefficient check.
pub fn fit_mod4_0(k: usize) -> Result<FittedModel> {
    if k != 4 && k != 8 {
        return Err(Error::BadK(k));
    }
    cached(k, || {
        let oracle = lattice_oracle(k)?;
        let model: Vec<(C, C)> =
            oracle.iter().map(|&(s, _)| mod4_0_base(k, s).map(|v| (s, v))).collect::<Result<_>>()?;
        let mut last = Error::FitFailed("no degree tried".into());
        for degree in 0..=3 {
            match fit_constants(&oracle, &model, degree, k) {
                Ok(fm) => {
                    let r = fm.rounded(64);
                    check_counts(k, &mod4_0_coefficients(&r, COEFF_CHECK))?;
                    return Ok(FittedModel { residuals: fm.residuals, ..r });
                }
                Err(e) => last = e,
            }
        }
        Err(last)
    })
}

/// Evaluates f at s, or extrapolates from f(s ± h) when s sits on a removable
/// singularity of the factorised form.
fn removable(s: C, w_one: C, f: impl Fn(C) -> Result<C>) -> Result<C> {
    if (s - w_one).norm() < 1e-7 {
        // Richardson-extrapolated symmetric means, O(h⁴).
        let mean = |h: f64| -> Result<C> { Ok((f(s + h)? + f(s - h)?) * 0.5) };
        return Ok((mean(1e-4)? * 4.0 - mean(2e-4)?) / 3.0);
    }
    f(s)
}

/// c_k ζ(ks/2) ζ(ks/2 − k/2 + 1) P(2^{-ks/2}) for k ∈ {4, 8}.
pub fn eisenstein_mod4_0(k: usize, s: C) -> Result<C> {
    let fm = fit_mod4_0(k)?;
    if (s - one()).norm() == 0.0 {
        return Err(Error::PoleAt1);
    }
    let kf = k as f64;
    removable(s, C::new(2.0 / kf, 0.0), |s| {
        Ok(fm.c * mod4_0_base(k, s)? * fm.poly_at(pow2_neg(s * (kf / 2.0))))
    })
}

fn mod4_2_base(k: usize, s: C) -> Result<C> {
    let w = s * (k as f64 / 2.0);
    let m = k as f64 / 2.0 - 1.0;
    let first = riemann_zeta(w)? * dirichlet_l(w - m, -4)? * chi4(k / 2);
    let second = dirichlet_l(w, -4)? * riemann_zeta(w - m)? * 2f64.powf(m);
    Ok(first + second)
}

/// The constant for k ∈ {2, 6}, fitted at Re s = 2 (degree 0). The raw fit is
/// returned; the n = 1 coefficient rule and r_k(n), n ≤ 64, are checked
/// against its rounded value.
pub fn fit_mod4_2(k: usize) -> Result<FittedModel> {
    if k != 2 && k != 6 {
        return Err(Error::BadK(k));
    }
    cached(k, || {
        let oracle = lattice_oracle(k)?;
        let model: Vec<(C, C)> =
            oracle.iter().map(|&(s, _)| mod4_2_base(k, s).map(|v| (s, v))).collect::<Result<_>>()?;
        let fm = fit_constants(&oracle, &model, 0, k)?;
        let r1 = representation_counts(k, 1)?.r(1) as f64;
        let from_n1 = r1 / (chi4(k / 2) + 2f64.powi(k as i32 / 2 - 1));
        if (fm.c - from_n1).norm() > 1e-8 * from_n1 {
            return Err(Error::FitFailed(format!("fitted c = {} but the n = 1 coefficient gives {from_n1}", fm.c)));
        }
        check_counts(k, &mod4_2_coefficients(k, round_rational(fm.c.re, 64), COEFF_CHECK))?;
        Ok(fm)
    })
}

/// c_k [χ₋₄(k/2) ζ(w) L(w − k/2 + 1, χ₋₄) + 2^{k/2−1} L(w, χ₋₄) ζ(w − k/2 + 1)], w = ks/2.
pub fn eisenstein_mod4_2(k: usize, s: C) -> Result<C> {
    let c = round_rational(fit_mod4_2(k)?.c.re, 64);
    if (s - one()).norm() == 0.0 {
        return Err(Error::PoleAt1);
    }
    removable(s, C::new(2.0 / k as f64, 0.0), |s| Ok(mod4_2_base(k, s)? * c))
}

/// Closed form for E(I_k, s) where one is implemented (k = 2, 4, 6, 8).
pub fn closed_form(k: usize, s: C) -> Result<C> {
    match k {
        4 => closed_form_k4(s),
        8 => eisenstein_mod4_0(k, s),
        2 | 6 => eisenstein_mod4_2(k, s),
        _ => Err(Error::BadK(k)),
    }
}

/// α = (3 − k)/2, β = 1 − α and the discriminant exponent w(s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohenParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl CohenParams {
    pub fn new(k: usize) -> Result<Self> {
        if k < 3 || k % 2 == 0 {
            return Err(Error::BadK(k));
        }
        let alpha = (3.0 - k as f64) / 2.0;
        Ok(CohenParams { k, alpha, beta: 1.0 - alpha })
    }

    /// ks/2 + α − 1/2 = ks/2 − k/2 + 1.
    pub fn w(&self, s: C) -> C {
        s * (self.k as f64 / 2.0) + (self.alpha - 0.5)
    }

    /// Sign of the discriminants in the sum.
    pub fn sign(&self) -> i64 {
        if (self.k - 1) / 2 % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohenSum {
    pub value: C,
    /// Bound on the omitted |D| > D_max part.
    pub tail: f64,
    /// Discriminants summed.
    pub terms: usize,
}

/// Fundamental discriminants D of the given sign with |D| ≤ d_max, by a
/// square-free sieve, ascending in |D|. The positive list starts with 1.
pub fn fundamental_discriminants(sign: i64, d_max: u64) -> Vec<i64> {
    let n = d_max as usize;
    let mut sqfree = vec![true; n + 1];
    let mut p = 2usize;
    while p * p <= n {
        for m in (p * p..=n).step_by(p * p) {
            sqfree[m] = false;
        }
        p += 1;
    }
    let mut out = Vec::new();
    for a in 1..=n {
        let d = sign * a as i64;
        let ok = if d == 1 {
            true
        } else if d.rem_euclid(4) == 1 {
            sqfree[a]
        } else if a % 4 == 0 {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && sqfree[a / 4]
        } else {
            false
        };
        if ok {
            out.push(d);
        }
    }
    out
}

/// L(n, χ_D) for an integer n ≥ 2 of the same parity as χ_D, from the
/// generalised Bernoulli number B_{n,χ} (exact integer power sums).
pub fn l_at_integer(n: u32, d: i64) -> Result<f64> {
    if d == 1 {
        return Ok(riemann_zeta(C::new(n as f64, 0.0))?.re);
    }
    let a = if d < 0 { 1 } else { 0 };
    if !(2..=3).contains(&n) || n % 2 != a {
        return Err(Error::BadRange(format!("L({n}, χ_{d}) not supported")));
    }
    let f = d.unsigned_abs() as i128;
    let mut s = [0i128; 4];
    for x in 1..f {
        let c = kronecker_raw(d, x as i64) as i128;
        if c != 0 {
            s[1] += c * x;
            s[2] += c * x * x;
            s[3] += c * x * x * x;
        }
    }
    let ff = f as f64;
    // f B_{2,χ} = S₂ − f S₁ and 2f B_{3,χ} = 2S₃ − 3f S₂ + f² S₁.
    let b = match n {
        2 => (s[2] - f * s[1]) as f64 / ff,
        _ => (2 * s[3] - 3 * f * s[2] + f * f * s[1]) as f64 / (2.0 * ff),
    };
    // L(n, χ) = (−1)^{1+(n−a)/2} τ(χ) / (2 i^a) (2π/f)^n B_{n,χ} / n!, τ/i^a = √f.
    let sgn = if (1 + (n - a) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let fact = if n == 2 { 2.0 } else { 6.0 };
    Ok(sgn * ff.sqrt() / 2.0 * (2.0 * std::f64::consts::PI / ff).powi(n as i32) * b / fact)
}

/// Σ_D L(β, χ_D) ζ(ks) ζ(ks + 2α − 1) / (|D|^{w} L(ks + α, χ_D)) over
/// fundamental D with (−1)^{(k−1)/2} D > 0, |D| ≤ d_max, without the
/// overall constant.
pub fn cohen_series(k: usize, s: C, d_max: u64) -> Result<CohenSum> {
    let p = CohenParams::new(k)?;
    let w = p.w(s);
    if !(w.re > 1.05) {
        return Err(Error::NotConvergent(format!("Re w = {} must exceed 1.05", w.re)));
    }
    if d_max < 100 {
        return Err(Error::BadRange(format!("D_max = {d_max} below 100")));
    }
    let kf = k as f64;
    let front = riemann_zeta(s * kf)? * riemann_zeta(s * kf + (2.0 * p.alpha - 1.0))?;
    let beta = p.beta.round() as u32;
    let shift = s * kf + p.alpha;
    let ds = fundamental_discriminants(p.sign(), d_max);
    let parts = exec::block_map(ds.len(), 64, |r| -> Result<CAcc> {
        let mut acc = CAcc::new();
        for &d in &ds[r] {
            let num = l_at_integer(beta, d)?;
            let den = dirichlet_l(shift, d)?;
            acc.add((-w * (d.unsigned_abs() as f64).ln()).exp() * num / den);
        }
        Ok(acc)
    });
    let mut acc = CAcc::new();
    for part in parts {
        acc.merge(&part?);
    }
    // |L(β, χ)| ≤ ζ(β), |1/L(σ, χ)| ≤ ζ(σ), Σ_{D > X} D^{-σ_w} ≤ X^{1−σ_w}/(σ_w − 1).
    let zb = riemann_zeta(C::new(p.beta, 0.0))?.re;
    let zs = riemann_zeta(C::new(shift.re, 0.0))?.re;
    let tail = front.norm() * zb * zs * (d_max as f64).powf(1.0 - w.re) / (w.re - 1.0);
    Ok(CohenSum { value: front * acc.value(), tail, terms: ds.len() })
}

#[cfg(test)]
mod tests;
