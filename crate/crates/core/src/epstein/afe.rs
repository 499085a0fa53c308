//! Smoothed approximate functional equation on the critical line.
//!
//! With s = 1/2 + it, d = det^{-1/2} and W^± the Mellin-smoothed cutoffs,
//!
//! E(Z, s) = Σ Q^{-w} W⁺(Q^{k/2})
//!         + d Γ_R(k(1−s))/Γ_R(ks) Σ Q₋^{-(k/2−w)} W⁻(Q₋^{k/2})
//!         − (2/k)/Γ_R(ks) [d e^{(1−s)²}/(1−s) + e^{s²}/s],
//!
//! where the last bracket collects the residues at s + u = 1 and s + u = 0
//! crossed when the u-contour is reflected.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::accum::{Acc, CAcc};
use crate::error::{Error, Result};
use crate::exec;
use crate::forms::{inverse_form, QuadraticForm};
use crate::lattice::{CountBounds, LatticeCache, Spectrum};
use crate::specfun::{log_gamma_r, IM_ENVELOPE};

use super::{rep, EvalOptions, EvalResult};

const STEP: f64 = 0.04;
const HALF_WIDTH: f64 = 10.0;

/// W(y) = (1/2πi) ∫_{(1)} e^{u²} Γ_R(k(u+s))/Γ_R(ks) y^{-u} du/u for
/// s = 1/2 + i·sign·t, discretised by the trapezoid rule on Re u = 1.
/// For y < 1 the contour moves to Re u = −1/4, past the residue 1 at u = 0.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    pub t: f64,
    pub k: usize,
    pub sign: i8,
    /// Nodes u_j = 1 + i v_j.
    pub nodes: Vec<C>,
    /// Weights including e^{u²} R(u)/u and the 1/2π factor.
    pub weights: Vec<C>,
    left: Vec<C>,
    l1: f64,
    s: C,
    lg_s: C,
}

impl WeightFunction {
    pub fn new(k: usize, t: f64, sign: i8) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadK(k));
        }
        let s = C::new(0.5, sign.signum() as f64 * t);
        let kf = k as f64;
        let lg_s = log_gamma_r(s * kf)?;
        let n = (2.0 * HALF_WIDTH / STEP).round() as usize;
        let mut nodes = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        let mut left = Vec::with_capacity(n + 1);
        let mut l1 = 0.0;
        let weight = |u: C| -> Result<C> {
            let lr = log_gamma_r((u + s) * kf)? - lg_s;
            Ok((u * u + lr).exp() / u * (STEP / (2.0 * PI)))
        };
        for j in 0..=n {
            let v = -HALF_WIDTH + j as f64 * STEP;
            let u = C::new(1.0, v);
            let c = weight(u)?;
            l1 += c.norm();
            nodes.push(u);
            weights.push(c);
            left.push(weight(C::new(-0.25, v))?);
        }
        Ok(WeightFunction { t, k, sign, nodes, weights, left, l1, s, lg_s })
    }

    /// W(y) given ln y.
    pub fn eval_ln(&self, ln_y: f64) -> C {
        let (re, ws, base) = if ln_y >= 0.0 { (1.0, &self.weights, 0.0) } else { (-0.25, &self.left, 1.0) };
        let mut rot = C::from_polar((-re * ln_y).exp(), -self.nodes[0].im * ln_y);
        let step = C::from_polar(1.0, -STEP * ln_y);
        let mut acc = C::new(base, 0.0);
        for (j, c) in ws.iter().enumerate() {
            if j > 0 {
                rot *= step;
            }
            acc += c * rot;
        }
        acc
    }

    pub fn eval(&self, y: f64) -> C {
        self.eval_ln(y.ln())
    }

    /// Roundoff scale of `eval_ln` on the right contour: Σ|c_j| y^{-1}.
    fn rounding(&self, ln_y: f64) -> f64 {
        self.l1 * (-ln_y.max(0.0)).exp() * f64::EPSILON * 20.0
    }

    /// ln of (1/2π) ∫ |e^{u²} R(u)/u| dv on Re u = a, so that
    /// |W(y)| ≤ e^{this} y^{-a}.
    fn ln_shift_bound(&self, a: f64) -> f64 {
        let kf = self.k as f64;
        let h = 0.05;
        let n = (2.0 * (HALF_WIDTH + 2.0) / h) as usize;
        let mut logs = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let v = -(HALF_WIDTH + 2.0) + j as f64 * h;
            let u = C::new(a, v);
            let lr = match log_gamma_r((u + self.s) * kf) {
                Ok(x) => (x - self.lg_s).re,
                Err(_) => return f64::INFINITY,
            };
            logs.push((u * u).re + lr - u.norm().ln());
        }
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - m).exp()).sum();
        // The endpoints carry e^{a² - 144}; the factor 2 covers what lies beyond.
        m + (2.0 * sum * h / (2.0 * PI)).ln()
    }
}

/// ln of a bound on Σ_{Q > q0} m |Q^{-w}| |W(Q^{k/2})| with Re w = k/4.
fn ln_tail(wf: &WeightFunction, shifts: &[(f64, f64)], cb: &CountBounds, q0: f64) -> f64 {
    let kf = wf.k as f64;
    let mut best = f64::INFINITY;
    for &(a, lm) in shifts {
        let p = kf / 4.0 + kf * a / 2.0;
        let gap = p - kf / 2.0;
        if gap <= 0.0 || !lm.is_finite() {
            continue;
        }
        // p ∫_0^∞ U(q0 e^y) (q0 e^y)^{-p} dy
        let y_max = 60.0 / gap;
        let n = 400;
        let h = y_max / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let y = i as f64 * h;
            let f = cb.upper(q0 * y.exp()) * (-p * y).exp();
            acc += if i == 0 || i == n { 0.5 * f } else { f };
        }
        let l = lm - p * q0.ln() + (p * acc * h).ln();
        best = best.min(l);
    }
    best
}

fn cutoff(wf: &WeightFunction, cb: &CountBounds, ln_eps: f64) -> f64 {
    let shifts: Vec<(f64, f64)> = [0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0]
        .iter()
        .map(|&a| (a, wf.ln_shift_bound(a)))
        .collect();
    let (mut lo, mut hi) = (-5.0f64, 5.0f64);
    while ln_tail(wf, &shifts, cb, hi.exp()) > ln_eps {
        lo = hi;
        hi += 5.0;
        if hi > 200.0 {
            return f64::INFINITY;
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ln_tail(wf, &shifts, cb, mid.exp()) > ln_eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

/// Σ m Q^{-a} W(Q^{k/2}) over the first n values; also the rounding budget.
fn weighted_sum(spec: &Spectrum, n: usize, a: C, wf: &WeightFunction) -> (C, f64) {
    let half = wf.k as f64 / 2.0;
    let parts = exec::block_map(n, 128, |r| {
        let mut acc = CAcc::default();
        let mut round = Acc::default();
        for j in r {
            let lq = spec.values[j].ln();
            let ly = half * lq;
            let head = (-a * lq).exp() * spec.mult[j];
            acc.add(head * wf.eval_ln(ly));
            round.add(head.norm() * (wf.rounding(ly) + f64::EPSILON));
        }
        (acc, round)
    });
    let mut acc = CAcc::default();
    let mut round = Acc::default();
    for (a, r) in &parts {
        acc.merge(a);
        round.merge(r);
    }
    (acc.value(), round.value() * (n.max(1) as f64).sqrt())
}

pub(super) fn evaluate_afe(q: &QuadraticForm, t: f64, opts: &EvalOptions, cache: &LatticeCache) -> Result<EvalResult> {
    if !(t.abs() >= 10.0) {
        return Err(Error::RegimeError(t));
    }
    let k = q.k();
    let kf = k as f64;
    if kf * t.abs() / 2.0 > IM_ENVELOPE {
        return Err(Error::EnvelopeExceeded(kf * t.abs() / 2.0));
    }
    let s = C::new(0.5, t);
    let w = s * (kf / 2.0);
    let d = q.det().powf(-0.5);
    let qi = inverse_form(q);
    let wp = WeightFunction::new(k, t, 1)?;
    let wm = WeightFunction::new(k, t, -1)?;

    let eps = 10f64.powf(-(opts.precision as f64 - rep::loss_digits(opts.precision)));
    let cb_p = CountBounds::of(q);
    let cb_m = CountBounds::of(&qi);
    let r_p = cutoff(&wp, &cb_p, (0.5 * eps).ln());
    let r_m = cutoff(&wm, &cb_m, (0.5 * eps / d).ln());
    if !r_p.is_finite() || !r_m.is_finite() {
        return Err(Error::CutoffTooLarge { predicted: f64::INFINITY, budget: opts.budget });
    }
    let sp = cache.get(q, r_p, opts.budget)?;
    let sm = cache.get(&qi, r_m, opts.budget)?;
    let np = sp.prefix_len(r_p);
    let nm = sm.prefix_len(r_m);

    let (plus, round_p) = weighted_sum(&sp, np, w, &wp);
    let (minus, round_m) = weighted_sum(&sm, nm, C::new(kf / 2.0, 0.0) - w, &wm);
    let lg_s = log_gamma_r(s * kf)?;
    let ratio = (log_gamma_r((C::new(1.0, 0.0) - s) * kf)? - lg_s).exp();
    let one_s = C::new(1.0, 0.0) - s;
    let polar = (2.0 / kf) * (d * (one_s * one_s - lg_s).exp() / one_s + (s * s - lg_s).exp() / s);
    let value = plus + d * ratio * minus - polar;
    let err = eps + 10.0 * (round_p + d * ratio.norm() * round_m);
    Ok(EvalResult { value, err, radius: r_p.max(r_m), points: sp.points_below(r_p) + sm.points_below(r_m) })
}
