//! Incomplete-gamma representation of the completed function, summed on a
//! rotated ray so that large |Im w| does not cost cancellation.
//!
//! With w = ks/2 and G(a, z) = z^{-a} Γ(a, z),
//!
//! Λ(s) = e^{iψw} [ −1/w − d e^{−iψk/2}/(k/2 − w)
//!                  + Σ G(w, πQ e^{iψ}) + d e^{−iψk/2} Σ G(k/2 − w, πQ₋ e^{−iψ}) ],
//!
//! where d = det^{-1/2}. At ψ = 0 this is the textbook form. Rotating by ψ
//! trades the exp(−π|T|/2) cancellation for exp(−θ|T|) with θ = π/2 − |ψ|.

use std::f64::consts::{FRAC_PI_2, LN_10, PI};

use num_complex::Complex64 as C;

use crate::accum::CAcc;
use crate::error::{Error, Result};
use crate::exec;
use crate::forms::{inverse_form, QuadraticForm};
use crate::lattice::{check_budget, CountBounds, LatticeCache, Spectrum};
use crate::specfun::{GKernel, GTable, IM_ENVELOPE};

use super::EvalOptions;

/// Bracketed sum B with everything needed to finish either Λ or E.
#[derive(Clone, Debug)]
pub(crate) struct Bracket {
    pub b: C,
    pub err: f64,
    pub psi: f64,
    pub w: C,
    pub radius: f64,
    pub points: u64,
}

/// Digits given up to cancellation in exchange for a shorter sum.
pub(crate) fn loss_digits(precision: u32) -> f64 {
    (20.0 - precision as f64).clamp(3.0, 10.0)
}

pub(crate) fn theta_angle(t_abs: f64, precision: u32) -> f64 {
    let c = loss_digits(precision) * LN_10;
    if t_abs * FRAC_PI_2 <= c {
        FRAC_PI_2
    } else {
        c / t_abs
    }
}

/// Upper bound for Σ_{v > v0} m |G(a, πv e^{±iψ})| from the count majorant,
/// with |G(a, z)| ≤ e^{−μ}/(μ − α⁺), μ = Re z, α = Re a − 1.
fn tail_bound(cb: &CountBounds, v0: f64, sin_th: f64, alpha: f64) -> f64 {
    let kappa = PI * sin_th;
    let mu0 = kappa * v0;
    let ap = alpha.max(0.0);
    if mu0 <= 2.0 * ap + 1.0 {
        return f64::INFINITY;
    }
    let h = 0.25;
    let mut acc = 0.0;
    for i in 0..=320 {
        let u = i as f64 * h;
        let mu = mu0 + u;
        let d = mu - ap;
        let f = cb.upper(v0 + u / kappa) * (-mu).exp() * (1.0 / d + 1.0 / (d * d));
        acc += if i == 0 { 0.5 * f } else { f };
    }
    acc * h
}

/// Smallest radius (on a 2% grid) whose tail bound is below `target`.
fn radius_for(cb: &CountBounds, sin_th: f64, alpha: f64, target: f64) -> f64 {
    let kappa = PI * sin_th;
    let mut v = ((2.0 * alpha.max(0.0) + 2.0) / kappa).max(1e-3);
    while tail_bound(cb, v, sin_th, alpha) > target {
        v *= 1.02;
    }
    v
}

/// Values past the continued-fraction threshold needed before tabulating.
const TABLE_MIN: usize = 2048;
/// Values per unit of λ needed before tabulating.
const TABLE_DENSITY: f64 = 256.0;

struct Partial {
    sum: C,
    worst: f64,
    points: u64,
}

/// Σ m_j G(a, π v_j e^{iφ}) over the first `n` values of the spectrum.
fn kernel_sum(spec: &Spectrum, n: usize, a: C, phi: f64) -> Partial {
    let kernel = GKernel::new(a);
    let rot = C::from_polar(1.0, phi);
    // Long sums switch to the tabulated kernel beyond the continued-fraction
    // threshold.
    let a_abs = a.norm();
    let j0 = spec.values[..n].partition_point(|&v| PI * v < a_abs + 1.0);
    let table = if n - j0 >= TABLE_MIN {
        let (lo, hi) = (PI * spec.values[j0], PI * spec.values[n - 1]);
        // Segments are about one unit of λ wide and each costs a few dozen
        // kernel calls to fit; sparse spectra are cheaper to sum directly.
        if (n - j0) as f64 >= TABLE_DENSITY * (hi - lo) {
            GTable::new(a, phi, lo, hi)
        } else {
            None
        }
    } else {
        None
    };
    let parts = exec::block_map(n, 256, |r| {
        let mut acc = CAcc::default();
        // Squared, to keep hypot out of the inner loop.
        let mut worst2 = 0.0f64;
        let mut pts = 0.0;
        let tol = |lam: f64, ln_lam: f64| f64::EPSILON * (4.0 + a_abs * (ln_lam * ln_lam + phi * phi).sqrt() + lam);
        let split = match &table {
            Some(_) => r.start.max(j0).min(r.end),
            None => r.end,
        };
        for j in r.start..split {
            let lam = PI * spec.values[j];
            let ln_lam = lam.ln();
            let g = kernel.eval(rot * lam, C::new(ln_lam, phi)) * spec.mult[j];
            let e = tol(lam, ln_lam);
            worst2 = worst2.max(g.norm_sqr() * e * e);
            acc.add(g);
            pts += spec.mult[j];
        }
        if let (Some(t), true) = (&table, split < r.end) {
            // λ ≥ 1 here, so the tolerance grows with λ and the block's
            // last value bounds it.
            let mut seg = t.segment_of(PI * spec.values[split]);
            let mut g2 = 0.0f64;
            for j in split..r.end {
                let g = t.eval_from(&mut seg, PI * spec.values[j]) * spec.mult[j];
                g2 = g2.max(g.norm_sqr());
                acc.add(g);
                pts += spec.mult[j];
            }
            let lam = PI * spec.values[r.end - 1];
            let e = tol(lam, lam.ln());
            worst2 = worst2.max(g2 * e * e);
        }
        (acc, worst2.sqrt(), pts)
    });
    let mut acc = CAcc::default();
    let mut worst = 0.0f64;
    let mut pts = 0.0;
    for (a, w, p) in parts {
        acc.merge(&a);
        worst = worst.max(w);
        pts += p;
    }
    Partial { sum: acc.value(), worst: worst * (n.max(1) as f64).sqrt(), points: pts as u64 }
}

pub(crate) fn check_s(q: &QuadraticForm, s: C) -> Result<C> {
    if s == C::new(1.0, 0.0) {
        return Err(Error::PoleAt1);
    }
    if s == C::new(0.0, 0.0) {
        return Err(Error::PoleAt0);
    }
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::BadRange(format!("non-finite s = {s}")));
    }
    let w = s * (q.k() as f64 / 2.0);
    if w.im.abs() > IM_ENVELOPE {
        return Err(Error::EnvelopeExceeded(w.im.abs()));
    }
    Ok(w)
}

/// Evaluate the bracket with radii scaled by `scale` (1 normally, 2 for the
/// doubling check).
pub(crate) fn bracket(q: &QuadraticForm, s: C, opts: &EvalOptions, cache: &LatticeCache, scale: f64) -> Result<Bracket> {
    let w = check_s(q, s)?;
    let k = q.k() as f64;
    let half = k / 2.0;
    let t = w.im;
    let theta = theta_angle(t.abs(), opts.precision);
    let psi = t.signum() * (FRAC_PI_2 - theta);
    let sin_th = theta.sin();
    let d = q.det().powf(-0.5);
    let qi = inverse_form(q);

    let target = 10f64.powf(-(opts.precision as f64 - loss_digits(opts.precision))) * (-theta * t.abs()).exp();
    let cb_p = CountBounds::of(q);
    let cb_m = CountBounds::of(&qi);
    let a_p = w;
    let a_m = C::new(half, 0.0) - w;
    let r_p = radius_for(&cb_p, sin_th, a_p.re - 1.0, 0.5 * target) * scale;
    let r_m = radius_for(&cb_m, sin_th, a_m.re - 1.0, 0.5 * target / d) * scale;
    check_budget(q, r_p, opts.budget)?;
    check_budget(&qi, r_m, opts.budget)?;

    let sp = cache.get(q, r_p, opts.budget)?;
    let sm = cache.get(&qi, r_m, opts.budget)?;
    let np = sp.prefix_len(r_p);
    let nm = sm.prefix_len(r_m);

    let plus = kernel_sum(&sp, np, a_p, psi);
    let minus = kernel_sum(&sm, nm, a_m, -psi);
    let ph = C::from_polar(d, -psi * half);
    let b = -1.0 / w - ph / a_m + plus.sum + ph * minus.sum;

    let tail = tail_bound(&cb_p, r_p, sin_th, a_p.re - 1.0) + d * tail_bound(&cb_m, r_m, sin_th, a_m.re - 1.0);
    let round = 10.0 * (plus.worst + d * minus.worst) + 4.0 * f64::EPSILON * (1.0 / w.norm() + d / a_m.norm());
    Ok(Bracket { b, err: tail + round, psi, w, radius: r_p.max(r_m), points: plus.points + minus.points })
}
