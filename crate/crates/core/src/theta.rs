//! θ(Q, s) = Σ_{x ≠ 0} e^{-s Q(x)} and its fourth moment on vertical lines.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::accum::{Acc, CAcc};
use crate::epstein;
use crate::error::{Error, Result};
use crate::exec;
use crate::forms::QuadraticForm;
use crate::lattice::{LatticeCache, Spectrum, DEFAULT_BUDGET};

/// Oscillation constant c in the step limit c / (T ln(T + 2)).
pub const STEP_CONSTANT: f64 = 0.1;
/// Minimum number of τ-samples for a moment.
pub const MIN_SAMPLES: u64 = 100;
/// τ-nodes per block; each block restarts its phase recurrence from exact
/// exponentials.
const TAU_BLOCK: usize = 1024;

/// Cutoff λ_min + (P ln 10 + 5) / Re s, measured from the smallest
/// eigenvalue so that large Re s keeps the minimal vectors.
pub fn theta_cutoff(q: &QuadraticForm, re_s: f64, precision: u32) -> f64 {
    q.lambda_min() + (precision as f64 * std::f64::consts::LN_10 + 5.0) / re_s
}

fn theta_on(spec: &Spectrum, n: usize, s: C) -> C {
    let parts = exec::block_map(n, 4096, |r| {
        let mut acc = CAcc::new();
        for j in r {
            acc.add((-s * spec.values[j]).exp() * spec.mult[j]);
        }
        acc
    });
    let mut acc = CAcc::new();
    for p in &parts {
        acc.merge(p);
    }
    acc.value()
}

/// θ(Q, s) at `precision` digits through the given cache.
pub fn theta_eval_with(q: &QuadraticForm, s: C, precision: u32, cache: &LatticeCache) -> Result<C> {
    if !(s.re > 0.0) {
        return Err(Error::NonpositiveRealPart(s.re));
    }
    let r = theta_cutoff(q, s.re, precision);
    let spec = cache.get(q, r, DEFAULT_BUDGET)?;
    Ok(theta_on(&spec, spec.prefix_len(r), s))
}

pub fn theta_eval(q: &QuadraticForm, s: C) -> Result<C> {
    let ev = epstein::global();
    theta_eval_with(q, s, ev.opts.precision, ev.cache())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaMomentRecord {
    #[serde(rename = "T")]
    pub t_scale: f64,
    #[serde(rename = "R")]
    pub r_start: f64,
    pub step: f64,
    /// Simpson estimate of ∫_R^{2R} |θ(Q, 1/T + iτ)|⁴ dτ.
    pub moment: f64,
    pub samples: u64,
}

impl ThetaMomentRecord {
    pub const CSV_HEADER: &'static str = "T,R,step,moment,samples";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{:e},{}", self.t_scale, self.r_start, self.step, self.moment, self.samples)
    }
}

/// Largest admissible τ-step at scale T.
pub fn max_step(t_scale: f64) -> f64 {
    STEP_CONSTANT / (t_scale * (t_scale + 2.0).ln())
}

/// |θ(1/T + iτ)|⁴ at τ = τ0 + i h for i in `range`, by a phase recurrence
/// over the distinct Q-values.
fn fourth_powers(amp: &[f64], vals: &[f64], tau0: f64, h: f64, range: std::ops::Range<usize>) -> Vec<f64> {
    let n = amp.len();
    let start = tau0 + range.start as f64 * h;
    let mut zr = Vec::with_capacity(n);
    let mut zi = Vec::with_capacity(n);
    let mut rr = Vec::with_capacity(n);
    let mut ri = Vec::with_capacity(n);
    for (&a, &v) in amp.iter().zip(vals) {
        let (s, c) = (-start * v).sin_cos();
        zr.push(a * c);
        zi.push(a * s);
        let (s, c) = (-h * v).sin_cos();
        rr.push(c);
        ri.push(s);
    }
    let mut out = Vec::with_capacity(range.len());
    for _ in range {
        let (mut sr, mut si) = (0.0, 0.0);
        for j in 0..n {
            sr += zr[j];
            si += zi[j];
            let (a, b) = (zr[j], zi[j]);
            zr[j] = a * rr[j] - b * ri[j];
            zi[j] = a * ri[j] + b * rr[j];
        }
        let m2 = sr * sr + si * si;
        out.push(m2 * m2);
    }
    out
}

/// Composite Simpson estimate of ∫_R^{2R} |θ(Q, 1/T + iτ)|⁴ dτ with an even
/// number of intervals no coarser than `step`.
pub fn theta_fourth_moment_with(
    q: &QuadraticForm,
    t_scale: f64,
    r_start: f64,
    step: f64,
    precision: u32,
    cache: &LatticeCache,
) -> Result<ThetaMomentRecord> {
    if !(t_scale >= 1.0) {
        return Err(Error::BadRange(format!("T = {t_scale} must be at least 1")));
    }
    if !(r_start >= 0.0) || !(step > 0.0) {
        return Err(Error::BadRange(format!("need R ≥ 0 and step > 0, got R = {r_start}, step = {step}")));
    }
    let limit = max_step(t_scale);
    if step > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { step, limit });
    }
    let samples = (r_start / step).floor() as u64;
    if r_start == 0.0 {
        return Ok(ThetaMomentRecord { t_scale, r_start, step, moment: 0.0, samples: 0 });
    }
    if samples < MIN_SAMPLES {
        return Err(Error::BadRange(format!("R/step = {samples} samples, need at least {MIN_SAMPLES}")));
    }
    let sigma = 1.0 / t_scale;
    let rc = theta_cutoff(q, sigma, precision);
    let spec = cache.get(q, rc, DEFAULT_BUDGET)?;
    let n = spec.prefix_len(rc);
    let vals = &spec.values[..n];
    let amp: Vec<f64> = vals.iter().zip(&spec.mult).map(|(&v, &m)| m * (-sigma * v).exp()).collect();

    let intervals = (samples + samples % 2) as usize;
    let h = r_start / intervals as f64;
    let nodes = intervals + 1;
    let blocks = exec::block_map(nodes, TAU_BLOCK, |r| {
        let first = r.start;
        let f = fourth_powers(&amp, vals, r_start, h, r);
        let mut acc = Acc::new();
        for (i, v) in f.iter().enumerate() {
            let idx = first + i;
            let w = if idx == 0 || idx == intervals {
                1.0
            } else if idx % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc.add(w * v);
        }
        acc
    });
    let mut acc = Acc::new();
    for b in &blocks {
        acc.merge(b);
    }
    Ok(ThetaMomentRecord { t_scale, r_start, step, moment: acc.value() * h / 3.0, samples })
}

pub fn theta_fourth_moment(q: &QuadraticForm, t_scale: f64, r_start: f64, step: f64) -> Result<ThetaMomentRecord> {
    let ev = epstein::global();
    theta_fourth_moment_with(q, t_scale, r_start, step, ev.opts.precision, ev.cache())
}

/// Relative change of the moment when the step is halved.
pub fn moment_halving_change(q: &QuadraticForm, t_scale: f64, r_start: f64, step: f64) -> Result<f64> {
    let a = theta_fourth_moment(q, t_scale, r_start, step)?;
    let b = theta_fourth_moment(q, t_scale, r_start, step / 2.0)?;
    Ok((a.moment - b.moment).abs() / b.moment.abs().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{diagonal, identity, inverse_form, make_form};
    use crate::specfun::log_gamma_real;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn gaussian_value() {
        // Σ_Z e^{-πx²} = π^{1/4} / Γ(3/4).
        let pi = std::f64::consts::PI;
        let one_d = (0.25 * pi.ln() - log_gamma_real(0.75)).exp();
        let th = theta_eval(&identity(2), c(pi, 0.0)).unwrap();
        assert!((th.re - (one_d * one_d - 1.0)).abs() < 1e-14, "{th}");
        assert!((th.re - 0.180_340_7).abs() < 5e-7);
    }

    #[test]
    fn conjugation_and_domain() {
        let q = diagonal(&[1.0, 1.3, 1.7]).unwrap();
        let s = c(0.3, 4.1);
        let a = theta_eval(&q, s).unwrap();
        let b = theta_eval(&q, s.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-13 * a.norm());
        assert_eq!(theta_eval(&q, c(0.0, 1.0)).unwrap_err(), Error::NonpositiveRealPart(0.0));
    }

    #[test]
    fn leading_term_dominates() {
        let q = make_form(2, &[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        // Six minimal vectors of value 1.
        let r50 = theta_eval(&q, c(50.0, 0.0)).unwrap().re / (6.0 * (-50.0f64).exp());
        let r60 = theta_eval(&q, c(60.0, 0.0)).unwrap().re / (6.0 * (-60.0f64).exp());
        assert!((r50 - 1.0).abs() < 1e-12 && (r60 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_identity() {
        let pi = std::f64::consts::PI;
        let q = make_form(3, &[vec![1.3, 0.2, -0.1], vec![0.2, 1.1, 0.3], vec![-0.1, 0.3, 1.7]]).unwrap();
        let qi = inverse_form(&q);
        for s in [0.5, 1.0, 2.2, 5.0] {
            let lhs = theta_eval(&q, c(s, 0.0)).unwrap().re + 1.0;
            let rhs = (pi / s).powf(1.5) / q.det().sqrt() * (theta_eval(&qi, c(pi * pi / s, 0.0)).unwrap().re + 1.0);
            assert!((lhs - rhs).abs() < 1e-10 * lhs, "s={s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn modulus_bounded_by_real_point() {
        let q = diagonal(&[1.0, 1.3, 1.7]).unwrap();
        let t = 20.0;
        let top = theta_eval(&q, c(1.0 / t, 0.0)).unwrap().re;
        for i in 0..25 {
            let tau = 0.37 * i as f64;
            assert!(theta_eval(&q, c(1.0 / t, tau)).unwrap().norm() <= top * (1.0 + 1e-12));
        }
    }

    #[test]
    fn real_point_scales_like_volume() {
        let q = diagonal(&[1.0, 1.3, 1.7]).unwrap();
        for t in [10.0, 100.0, 1000.0] {
            let r = theta_eval(&q, c(1.0 / t, 0.0)).unwrap().re / t.powf(1.5);
            // Leading term π^{3/2} / √det ≈ 3.75.
            assert!((1.0..=16.0).contains(&r), "T={t}: {r}");
        }
    }

    #[test]
    fn moment_limits_and_guards() {
        let q = identity(2);
        let m0 = theta_fourth_moment(&q, 1.0, 0.0, 0.01).unwrap();
        assert_eq!(m0.moment, 0.0);
        let top = theta_eval(&q, c(1.0, 0.0)).unwrap().re;
        let a = theta_fourth_moment(&q, 1.0, 1e-3, 1e-5).unwrap().moment;
        let b = theta_fourth_moment(&q, 1.0, 1e-4, 1e-6).unwrap().moment;
        assert!(a <= top.powi(4) * 1e-3 && b <= top.powi(4) * 1e-4);
        assert!((b / a - 0.1).abs() < 1e-3, "{}", b / a);
        let r = 3.0;
        let m = theta_fourth_moment(&q, 1.0, r, 0.01).unwrap();
        assert!(m.moment >= 0.0 && m.moment <= top.powi(4) * r);
        assert_eq!(m.samples, 300);
        assert!(matches!(theta_fourth_moment(&q, 10.0, 10.0, 0.1), Err(Error::StepTooCoarse { .. })));
        assert!(matches!(theta_fourth_moment(&q, 1.0, 0.5, 0.01), Err(Error::BadRange(_))));
    }

    #[test]
    fn moment_matches_direct_quadrature() {
        // Same Simpson rule with θ evaluated pointwise.
        let q = diagonal(&[1.0, 1.3, 1.7]).unwrap();
        let (t, r) = (4.0, 2.0);
        let step = max_step(t);
        let rec = theta_fourth_moment(&q, t, r, step).unwrap();
        let n = (rec.samples + rec.samples % 2) as usize;
        let h = r / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * theta_eval(&q, c(1.0 / t, r + i as f64 * h)).unwrap().norm().powi(4);
        }
        let direct = acc * h / 3.0;
        assert!((rec.moment - direct).abs() < 1e-10 * direct, "{} vs {direct}", rec.moment);
        assert!(moment_halving_change(&q, t, r, step).unwrap() < 0.01);
    }

    #[test]
    fn moments_match_product_reference() {
        // θ + 1 factors into one-dimensional thetas for diagonal forms; the
        // reference sums those with numpy on the same Simpson grid.
        let seeded = crate::forms::random_diagonal_form(3, 1.0, 2.0, 1).unwrap();
        let commensurate = diagonal(&[1.0, 1.3, 1.7]).unwrap();
        let cases = [
            (&seeded, 10.0, 995285.638146054),
            (&seeded, 20.0, 31487513.54437081),
            (&commensurate, 10.0, 1709067.0649917442),
            (&commensurate, 20.0, 16915883.19131802),
        ];
        for (q, t, want) in cases {
            let got = theta_fourth_moment(q, t, t, max_step(t)).unwrap().moment;
            assert!((got - want).abs() <= 1e-9 * want, "T = {t}: {got} vs {want}");
        }
    }
}
