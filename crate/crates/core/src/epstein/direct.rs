//! Sharp-cutoff Dirichlet sum plus the mean tail ∫_R^∞ v^{-w} dN_mean(v).
//!
//! The remainder is ∫_R^∞ v^{-w} dD(v) with D = N − N_mean, bounded by
//! |D(R)| R^{-σ_w} + |w| ∫_R^∞ |D(v)| v^{-σ_w-1} dv using the count sandwich.

use num_complex::Complex64 as C;

use crate::accum::{Acc, CAcc};
use crate::error::{Error, Result};
use crate::exec;
use crate::forms::QuadraticForm;
use crate::lattice::{enumeration_cost, CountBounds, LatticeCache};

use super::{EvalOptions, EvalResult};

/// Bound on the remainder after the mean-tail correction at cutoff r.
fn remainder_bound(cb: &CountBounds, r: f64, w: C) -> f64 {
    let sw = w.re;
    let k = cb.k as f64;
    let decay = sw - (k - 1.0) / 2.0;
    let y_max = 60.0 / decay;
    let n = 2000;
    let h = y_max / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let y = i as f64 * h;
        let v = r * y.exp();
        let f = cb.discrepancy(v) * v.powf(-sw);
        acc += if i == 0 || i == n { 0.5 * f } else { f };
    }
    cb.discrepancy(r) * r.powf(-sw) + w.norm() * acc * h * 1.01
}

/// Largest radius whose enumeration cost fits the budget.
fn radius_cap(q: &QuadraticForm, budget: f64) -> f64 {
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while enumeration_cost(q, hi) <= budget {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if enumeration_cost(q, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub(super) fn evaluate_direct(
    q: &QuadraticForm,
    s: C,
    tail_eps: f64,
    opts: &EvalOptions,
    cache: &LatticeCache,
) -> Result<EvalResult> {
    let k = q.k() as f64;
    if !(tail_eps > 0.0) {
        return Err(Error::BadRange(format!("tail_eps must be positive, got {tail_eps}")));
    }
    if !(s.re >= 1.0 + 1.0 / k) {
        return Err(Error::NotConvergent(format!("Re s = {} below 1 + 1/k = {}", s.re, 1.0 + 1.0 / k)));
    }
    let w = s * (k / 2.0);
    let cb = CountBounds::of(q);
    let cap = radius_cap(q, opts.direct_budget);
    let mut r = 1.0f64;
    while r < cap && remainder_bound(&cb, r, w) > tail_eps {
        r *= 1.05;
    }
    let r = r.min(cap);

    let spec = cache.get(q, r, opts.budget)?;
    let n = spec.prefix_len(r);
    let parts = exec::block_map(n, 1024, |range| {
        let mut acc = CAcc::default();
        let mut abs = Acc::default();
        for j in range {
            let t = (-w * spec.values[j].ln()).exp() * spec.mult[j];
            abs.add(t.norm());
            acc.add(t);
        }
        (acc, abs)
    });
    let mut acc = CAcc::default();
    let mut abs = Acc::default();
    for (a, b) in &parts {
        acc.merge(a);
        abs.merge(b);
    }
    let half = C::new(k / 2.0, 0.0);
    let mean_tail = cb.c * (k / 2.0) * (half - w).scale(r.ln()).exp() / (w - half);
    let value = acc.value() + mean_tail;
    let err = remainder_bound(&cb, r, w) + 4.0 * f64::EPSILON * (abs.value() + mean_tail.norm());
    Ok(EvalResult { value, err, radius: r, points: spec.points_below(r) })
}
