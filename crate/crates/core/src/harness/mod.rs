//! Experiment driver: critical-line sweeps, growth fits, mean squares and the
//! verification suites.

mod verify;

use std::io::Write;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::epstein::{self, Evaluator};
use crate::error::{Error, Result};
use crate::exec;
use crate::forms::QuadraticForm;

pub use verify::{closedform_points, verify, verify_with, VerifyOptions, VerifyReport, SUITES};

/// Subconvexity savings δ_k in the upper bound exponent k/4 − δ_k.
pub const DELTA_2: f64 = 1.0 / 6.0;
pub const DELTA_3: f64 = 1.0 / 4.0;
pub const DELTA_GENERIC: f64 = 1.0 / 2.0;

pub fn delta(k: usize) -> f64 {
    match k {
        2 => DELTA_2,
        3 => DELTA_3,
        _ => DELTA_GENERIC,
    }
}

/// Upper-bound exponent k/4 − δ_k.
pub fn upper_exponent(k: usize) -> f64 {
    k as f64 / 4.0 - delta(k)
}

/// Lower-bound growth exponent k/4 − 1/2.
pub fn omega_exponent(k: usize) -> f64 {
    k as f64 / 4.0 - 0.5
}

/// λ(t) = (k³ − k)/24 + k(k − 1) t²/2.
pub fn laplace_eigenvalue(k: usize, t: f64) -> f64 {
    let kf = k as f64;
    (kf * kf * kf - kf) / 24.0 + kf * (kf - 1.0) * t * t / 2.0
}

/// log(sup |E|) / log λ(t); compare with k/8 − 1/4.
pub fn purity_ratio(k: usize, t: f64, sup_abs: f64) -> Result<f64> {
    let lam = laplace_eigenvalue(k, t);
    if !(sup_abs > 0.0) || t == 0.0 || !(lam > 0.0) || lam.ln() == 0.0 {
        return Err(Error::DegenerateInput(format!("sup_abs = {sup_abs}, t = {t}, λ = {lam}")));
    }
    Ok(sup_abs.ln() / lam.ln())
}

/// One row of a critical-line sweep; a failed evaluation leaves NaNs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub err: f64,
    pub lambda: f64,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        !self.abs.is_finite()
    }
}

pub const SWEEP_HEADER: &str = "t,re,im,abs,err,lambda";

/// Number of grid points t0, t0 + step, … ≤ t1.
pub fn grid_len(t0: f64, t1: f64, step: f64) -> usize {
    ((t1 - t0) / step + 1e-9).floor() as usize + 1
}

pub fn sweep_critical_line_with(ev: &Evaluator, q: &QuadraticForm, t0: f64, t1: f64, step: f64) -> Result<Vec<SweepRecord>> {
    if !(t0 >= 0.0 && t1 > t0 && step > 0.0) {
        return Err(Error::BadRange(format!("need 0 ≤ t0 < t1 and step > 0, got {t0}, {t1}, {step}")));
    }
    let n = grid_len(t0, t1, step);
    let ts: Vec<f64> = (0..n).map(|i| t0 + i as f64 * step).collect();
    let k = q.k();
    let row = |&t: &f64| {
        let lambda = laplace_eigenvalue(k, t);
        match ev.evaluate(q, C::new(0.5, t)) {
            Ok(r) => SweepRecord { t, re: r.value.re, im: r.value.im, abs: r.value.norm(), err: r.err, lambda },
            Err(_) => SweepRecord { t, re: f64::NAN, im: f64::NAN, abs: f64::NAN, err: f64::NAN, lambda },
        }
    };
    // The largest t needs the largest radius; evaluating it first fills the
    // cache once for the whole sweep.
    let last = row(&ts[n - 1]);
    let mut out = exec::ordered_map(&ts[..n - 1], row);
    out.push(last);
    Ok(out)
}

pub fn sweep_critical_line(q: &QuadraticForm, t0: f64, t1: f64, step: f64) -> Result<Vec<SweepRecord>> {
    sweep_critical_line_with(epstein::global(), q, t0, t1, step)
}

fn csv_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t,
            csv_num(r.re),
            csv_num(r.im),
            csv_num(r.abs),
            csv_num(r.err),
            csv_num(r.lambda)
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthMode {
    /// Running maximum of |E| at the rows where it is attained.
    Envelope,
    /// Every row.
    AllPoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub stderr: f64,
    pub n: usize,
    pub mode: GrowthMode,
}

/// Least-squares slope and its standard error.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum();
    let stderr = if n > 2.0 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, icept, stderr)
}

pub fn fit_growth_exponent(records: &[SweepRecord], mode: GrowthMode) -> Result<GrowthFit> {
    let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.t > 0.0 && r.abs > 0.0 && r.abs.is_finite()).collect();
    if rows.len() < 8 {
        return Err(Error::SpanTooSmall(format!("{} usable rows, need 8", rows.len())));
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.t), b.max(r.t)));
    if hi < 10.0 * lo {
        return Err(Error::SpanTooSmall(format!("t spans [{lo}, {hi}], less than a decade")));
    }
    let mut sorted = rows;
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let pts: Vec<(f64, f64)> = match mode {
        GrowthMode::AllPoints => sorted.iter().map(|r| (r.t.ln(), r.abs.ln())).collect(),
        GrowthMode::Envelope => {
            let mut best = 0.0f64;
            let mut v = Vec::new();
            for r in &sorted {
                if r.abs >= best {
                    best = r.abs;
                    v.push((r.t.ln(), best.ln()));
                }
            }
            v
        }
    };
    if pts.len() < 8 {
        return Err(Error::SpanTooSmall(format!("{} envelope breakpoints, need 8", pts.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (exponent, _, stderr) = linear_fit(&x, &y);
    Ok(GrowthFit { exponent, stderr, n: x.len(), mode })
}

/// Largest admissible mean-square step.
pub fn mean_square_max_step(k: usize) -> f64 {
    0.25 / k as f64
}

fn simpson(vals: &[f64], h: f64) -> f64 {
    let n = vals.len() - 1;
    let mut acc = crate::accum::Acc::new();
    for (i, v) in vals.iter().enumerate() {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(w * v);
    }
    acc.value() * h / 3.0
}

fn abs_squares(ev: &Evaluator, q: &QuadraticForm, ts: &[f64]) -> Result<Vec<f64>> {
    if let Some(&t) = ts.last() {
        ev.evaluate(q, C::new(0.5, t))?;
    }
    exec::ordered_map(ts, |&t| ev.evaluate(q, C::new(0.5, t)).map(|r| r.value.norm_sqr())).into_iter().collect()
}

/// ∫₀^X |E(Z, 1/2 + it)|² dt at each X in `xs` from one shared Simpson grid
/// of spacing at most `step`.
pub fn mean_square_profile_with(ev: &Evaluator, q: &QuadraticForm, xs: &[f64], step: f64) -> Result<Vec<f64>> {
    let limit = mean_square_max_step(q.k());
    if !(step > 0.0) {
        return Err(Error::BadRange(format!("step {step} must be positive")));
    }
    if step > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { step, limit });
    }
    if xs.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::BadRange("X must be finite and non-negative".into()));
    }
    let x_max = xs.iter().cloned().fold(0.0, f64::max);
    if x_max == 0.0 {
        return Ok(vec![0.0; xs.len()]);
    }
    // Node spacing h = x_max / N with N even; every X that is an even
    // multiple of h reuses the grid, the rest get their own.
    let mut n = (x_max / step).ceil() as usize;
    n += n % 2;
    let h = x_max / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let vals = abs_squares(ev, q, &ts)?;
    xs.iter()
        .map(|&x| {
            if x == 0.0 {
                return Ok(0.0);
            }
            let m = (x / h).round() as usize;
            if m % 2 == 0 && ((m as f64) * h - x).abs() <= 1e-9 * x {
                Ok(simpson(&vals[..=m], h))
            } else {
                mean_square_with(ev, q, x, step)
            }
        })
        .collect()
}

pub fn mean_square_with(ev: &Evaluator, q: &QuadraticForm, x: f64, step: f64) -> Result<f64> {
    let limit = mean_square_max_step(q.k());
    if !(step > 0.0) || !(x >= 0.0) || !x.is_finite() {
        return Err(Error::BadRange(format!("need X ≥ 0 and step > 0, got X = {x}, step = {step}")));
    }
    if step > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { step, limit });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut n = (x / step).ceil() as usize;
    n += n % 2;
    let h = x / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    Ok(simpson(&abs_squares(ev, q, &ts)?, h))
}

pub fn mean_square(q: &QuadraticForm, x: f64, step: f64) -> Result<f64> {
    mean_square_with(epstein::global(), q, x, step)
}

pub fn mean_square_profile(q: &QuadraticForm, xs: &[f64], step: f64) -> Result<Vec<f64>> {
    mean_square_profile_with(epstein::global(), q, xs, step)
}
