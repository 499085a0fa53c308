//! Epstein zeta values E(Z, s) = Σ_{x ≠ 0} Q(x)^{-ks/2}.
//!
//! Three paths that check one another:
//! * [`Evaluator::evaluate`]: incomplete-gamma lattice representation, valid
//!   for every s except 0 and 1;
//! * [`Evaluator::evaluate_direct`]: the Dirichlet series itself, for
//!   Re s > 1 + 1/k;
//! * [`Evaluator::evaluate_afe`]: smoothed approximate functional equation on
//!   the critical line.

mod afe;
mod direct;
mod rep;

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forms::QuadraticForm;
use crate::lattice::{LatticeCache, DEFAULT_BUDGET};
use crate::specfun::log_gamma;

pub use afe::WeightFunction;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: C,
    /// Estimated absolute error of `value`.
    pub err: f64,
    /// Largest Q-value cutoff used.
    pub radius: f64,
    /// Lattice points that entered the sums.
    pub points: u64,
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Target decimal digits.
    pub precision: u32,
    /// Limit on predicted lattice points for one enumeration.
    pub budget: f64,
    /// Re-run every evaluation at twice the radius and widen `err` to the
    /// observed change.
    pub verify_doubling: bool,
    /// Point budget for the direct Dirichlet sum.
    pub direct_budget: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { precision: 15, budget: DEFAULT_BUDGET, verify_doubling: false, direct_budget: 2e7 }
    }
}

/// Evaluation settings together with the lattice cache they share.
pub struct Evaluator {
    pub opts: EvalOptions,
    cache: LatticeCache,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator::new(EvalOptions::default())
    }
}

impl Evaluator {
    pub fn new(opts: EvalOptions) -> Self {
        Evaluator { opts, cache: LatticeCache::default() }
    }

    pub fn with_cache(opts: EvalOptions, cache: LatticeCache) -> Self {
        Evaluator { opts, cache }
    }

    pub fn cache(&self) -> &LatticeCache {
        &self.cache
    }

    /// E(Z, s) from the incomplete-gamma representation.
    pub fn evaluate(&self, q: &QuadraticForm, s: C) -> Result<EvalResult> {
        let w = rep::check_s(q, s)?;
        if w.im == 0.0 && w.re < 0.0 && w.re.fract() == 0.0 {
            // 1/Γ(w) vanishes: a trivial zero.
            return Ok(EvalResult { value: C::new(0.0, 0.0), err: f64::MIN_POSITIVE, radius: 0.0, points: 0 });
        }
        let lg = log_gamma(w)?;
        let finish = |b: &rep::Bracket| {
            let pref = (C::i() * b.psi * w + w * PI.ln() - lg).exp();
            (pref * b.b, pref.norm() * b.err)
        };
        let br = rep::bracket(q, s, &self.opts, &self.cache, 1.0)?;
        let (value, mut err) = finish(&br);
        if self.opts.verify_doubling {
            let br2 = rep::bracket(q, s, &self.opts, &self.cache, 2.0)?;
            err = err.max((finish(&br2).0 - value).norm());
        }
        Ok(EvalResult { value, err: err.max(f64::MIN_POSITIVE), radius: br.radius, points: br.points })
    }

    /// Λ(s) = Γ_R(ks) E(Z, s) with its absolute error.
    pub fn completed(&self, q: &QuadraticForm, s: C) -> Result<(C, f64)> {
        let br = rep::bracket(q, s, &self.opts, &self.cache, 1.0)?;
        let ph = (C::i() * br.psi * br.w).exp();
        let mut err = ph.norm() * br.err;
        let value = ph * br.b;
        if self.opts.verify_doubling {
            let br2 = rep::bracket(q, s, &self.opts, &self.cache, 2.0)?;
            err = err.max((ph * br2.b - value).norm());
        }
        Ok((value, err))
    }

    pub fn completed_lambda(&self, q: &QuadraticForm, s: C) -> Result<C> {
        self.completed(q, s).map(|v| v.0)
    }

    /// Direct Dirichlet sum with mean-tail correction.
    pub fn evaluate_direct(&self, q: &QuadraticForm, s: C, tail_eps: f64) -> Result<EvalResult> {
        direct::evaluate_direct(q, s, tail_eps, &self.opts, &self.cache)
    }

    /// Smoothed approximate functional equation at s = 1/2 + it.
    pub fn evaluate_afe(&self, q: &QuadraticForm, t: f64) -> Result<EvalResult> {
        afe::evaluate_afe(q, t, &self.opts, &self.cache)
    }
}

/// Process-wide evaluator with default options.
pub fn global() -> &'static Evaluator {
    static G: OnceLock<Evaluator> = OnceLock::new();
    G.get_or_init(Evaluator::default)
}

pub fn evaluate(q: &QuadraticForm, s: C) -> Result<EvalResult> {
    global().evaluate(q, s)
}

pub fn completed_lambda(q: &QuadraticForm, s: C) -> Result<C> {
    global().completed_lambda(q, s)
}

pub fn evaluate_direct(q: &QuadraticForm, s: C, tail_eps: f64) -> Result<EvalResult> {
    global().evaluate_direct(q, s, tail_eps)
}

pub fn evaluate_afe(q: &QuadraticForm, t: f64) -> Result<EvalResult> {
    global().evaluate_afe(q, t)
}
