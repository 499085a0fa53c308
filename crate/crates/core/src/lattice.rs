//! Lattice points of a positive-definite form below a cutoff.
//!
//! [`for_each_point`] is the Fincke–Pohst recursion over the Cholesky factor;
//! [`Spectrum`] is the values-only view (distinct Q-values with
//! multiplicities) that the evaluators consume.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex, RwLock};

use crate::error::{Error, Result};
use crate::exec;
use crate::forms::QuadraticForm;
use crate::specfun::log_gamma_real;

/// Default limit on the predicted number of lattice points.
pub const DEFAULT_BUDGET: f64 = 1e9;

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub value: f64,
}

/// Volume of the unit ball in R^k.
pub fn unit_ball_volume(k: usize) -> f64 {
    let h = k as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - log_gamma_real(h + 1.0)).exp()
}

/// Constants for the point-count sandwich
/// c (√R − ρ)^k − 1 ≤ #{x ≠ 0 : Q(x) ≤ R} ≤ c (√R + ρ)^k,
/// with c = V_k / √det and ρ the largest √Q over the corners of the
/// half-unit cube.
#[derive(Clone, Copy, Debug)]
pub struct CountBounds {
    pub c: f64,
    pub rho: f64,
    pub k: usize,
}

impl CountBounds {
    pub fn of(q: &QuadraticForm) -> Self {
        let k = q.k();
        let mut best = 0.0f64;
        let mut y = vec![0.0; k];
        for mask in 0u32..(1u32 << k) {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = if mask >> i & 1 == 1 { 0.5 } else { -0.5 };
            }
            let mut s = 0.0;
            for i in 0..k {
                for j in 0..k {
                    s += y[i] * q.gram(i, j) * y[j];
                }
            }
            best = best.max(s);
        }
        CountBounds { c: unit_ball_volume(k) / q.det().sqrt(), rho: best.sqrt(), k }
    }

    pub fn upper(&self, r: f64) -> f64 {
        self.c * (r.max(0.0).sqrt() + self.rho).powi(self.k as i32)
    }

    /// Mean count c R^{k/2}.
    pub fn mean(&self, r: f64) -> f64 {
        self.c * r.max(0.0).powf(self.k as f64 / 2.0)
    }

    /// Bound on |N(R) − c R^{k/2}|.
    pub fn discrepancy(&self, r: f64) -> f64 {
        let s = r.max(0.0).sqrt();
        let up = self.c * ((s + self.rho).powi(self.k as i32) - s.powi(self.k as i32));
        let lo = self.c * (s.powi(self.k as i32) - (s - self.rho).max(0.0).powi(self.k as i32));
        up.max(lo) + 1.0
    }
}

pub fn predicted_points(q: &QuadraticForm, r: f64) -> f64 {
    CountBounds::of(q).upper(r)
}

fn convolvable(q: &QuadraticForm, r: f64) -> Option<Vec<u64>> {
    q.integral_diagonal().filter(|_| q.k() >= 3 && r <= 5e7)
}

/// Work estimate for building the spectrum below `r`: the predicted point
/// count for enumeration, r^{3/2} when the convolution path applies.
pub fn enumeration_cost(q: &QuadraticForm, r: f64) -> f64 {
    match convolvable(q, r) {
        Some(_) => r.max(1.0).powf(1.5),
        None => predicted_points(q, r),
    }
}

pub fn check_budget(q: &QuadraticForm, r: f64, budget: f64) -> Result<()> {
    let p = enumeration_cost(q, r);
    if p > budget {
        return Err(Error::CutoffTooLarge { predicted: p, budget });
    }
    Ok(())
}

struct Recursion<'a> {
    form: &'a QuadraticForm,
    k: usize,
    q: Vec<f64>,
    mu: Vec<f64>,
}

impl<'a> Recursion<'a> {
    /// Q(x) = Σ_i q_i (x_i + Σ_{j>i} mu_ij x_j)², from Z = Uᵀ D U with U unit
    /// upper triangular (no square roots, so diagonal forms stay exact).
    fn new(form: &'a QuadraticForm) -> Self {
        let k = form.k();
        let mut q = vec![0.0; k];
        let mut mu = vec![0.0; k * k];
        for i in 0..k {
            mu[i * k + i] = 1.0;
        }
        for i in 0..k {
            let mut d = form.gram(i, i);
            for p in 0..i {
                d -= mu[p * k + i] * mu[p * k + i] * q[p];
            }
            q[i] = d;
            for j in (i + 1)..k {
                let mut v = form.gram(i, j);
                for p in 0..i {
                    v -= mu[p * k + i] * mu[p * k + j] * q[p];
                }
                mu[i * k + j] = v / d;
            }
        }
        Recursion { form, k, q, mu }
    }

    fn center(&self, i: usize, x: &[i64]) -> f64 {
        let mut c = 0.0;
        for j in (i + 1)..self.k {
            c -= self.mu[i * self.k + j] * x[j] as f64;
        }
        c
    }

    /// Enumerate with the outermost coordinate fixed to `top`. `half` keeps
    /// one representative of each ±x pair (the first nonzero coordinate from
    /// the top is positive).
    fn run<F: FnMut(&[i64], f64)>(&self, r: f64, top: i64, half: bool, f: &mut F) {
        let k = self.k;
        let slack = 1e-9 * r + 1e-300;
        let mut x = vec![0i64; k];
        let mut hi = vec![0i64; k];
        let mut c = vec![0.0f64; k];
        let mut part = vec![0.0f64; k + 1];
        let top_level = k - 1;
        x[top_level] = top;
        let d0 = top as f64 - c[top_level];
        part[top_level] = self.q[top_level] * d0 * d0;
        if part[top_level] > r + slack {
            return;
        }
        hi[top_level] = top;
        let mut i = top_level;
        let mut descending = true;
        loop {
            if descending {
                if i == 1 {
                    self.innermost_row(r, slack, half, &mut x, part[1], f);
                    descending = false;
                    continue;
                }
                let j = i - 1;
                c[j] = self.center(j, &x);
                let rem = r - part[i] + slack;
                if rem < 0.0 {
                    descending = false;
                    continue;
                }
                let w = (rem / self.q[j]).sqrt();
                let mut lo = (c[j] - w).ceil() as i64;
                let up = (c[j] + w).floor() as i64;
                if half && x[j + 1..].iter().all(|&v| v == 0) {
                    lo = lo.max(0);
                }
                if lo > up {
                    descending = false;
                    continue;
                }
                x[j] = lo;
                hi[j] = up;
                let d = lo as f64 - c[j];
                part[j] = part[i] + self.q[j] * d * d;
                i = j;
            } else {
                // advance the current level, or climb
                if i == top_level {
                    return;
                }
                if x[i] < hi[i] {
                    x[i] += 1;
                    let d = x[i] as f64 - c[i];
                    part[i] = part[i + 1] + self.q[i] * d * d;
                    descending = true;
                } else {
                    x[i] = 0;
                    i += 1;
                }
            }
        }
    }

    /// Level 0 with x_1, …, x_{k−1} fixed: Q(x) = 2x₀(Z₀₀x₀/2 + b) + rest,
    /// where b and rest do not depend on x₀.
    fn innermost_row<F: FnMut(&[i64], f64)>(&self, r: f64, slack: f64, half: bool, x: &mut [i64], part1: f64, f: &mut F) {
        let k = self.k;
        let rem = r - part1 + slack;
        if rem < 0.0 {
            return;
        }
        let c0 = self.center(0, x);
        let w = (rem / self.q[0]).sqrt();
        let mut lo = (c0 - w).ceil() as i64;
        let up = (c0 + w).floor() as i64;
        let others_zero = x[1..].iter().all(|&v| v == 0);
        if half && others_zero {
            lo = lo.max(0);
        }
        let z = self.form.gram_matrix();
        let mut b = 0.0;
        for j in 1..k {
            b += z[j] * x[j] as f64;
        }
        let mut rest = 0.0;
        for i in 1..k {
            let xi = x[i] as f64;
            let mut row = 0.5 * z[i * k + i] * xi;
            for j in (i + 1)..k {
                row += z[i * k + j] * x[j] as f64;
            }
            rest += 2.0 * xi * row;
        }
        let h00 = 0.5 * z[0];
        for x0 in lo..=up {
            if x0 == 0 && others_zero {
                continue;
            }
            let xf = x0 as f64;
            let v = 2.0 * xf * (h00 * xf + b) + rest;
            if v <= r {
                x[0] = x0;
                f(x, v);
            }
        }
        x[0] = 0;
    }

    fn top_range(&self, r: f64, half: bool) -> (i64, i64) {
        let w = ((r + 1e-9 * r) / self.q[self.k - 1]).sqrt();
        let hi = w.floor() as i64;
        (if half { 0 } else { -hi }, hi)
    }
}

/// Call `f(coords, Q(x))` for every x ≠ 0 with Q(x) ≤ R, in lexicographic
/// order on (x_{k-1}, …, x_0).
pub fn for_each_point<F: FnMut(&[i64], f64)>(q: &QuadraticForm, r: f64, budget: f64, mut f: F) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::BadRange(format!("radius {r} must be non-negative")));
    }
    check_budget(q, r, budget)?;
    let rec = Recursion::new(q);
    let (lo, hi) = rec.top_range(r, false);
    for top in lo..=hi {
        rec.run(r, top, false, &mut f);
    }
    Ok(())
}

/// Materialized enumeration (small radii; tests and the CLI).
pub fn enumerate_below(q: &QuadraticForm, r: f64) -> Result<Vec<LatticePoint>> {
    let mut out = Vec::new();
    for_each_point(q, r, DEFAULT_BUDGET, |x, v| out.push(LatticePoint { coords: x.to_vec(), value: v }))?;
    Ok(out)
}

/// Number of x ≠ 0 with Q(x) ≤ R.
pub fn count_below(q: &QuadraticForm, r: f64, budget: f64) -> Result<u64> {
    if !(r >= 0.0) {
        return Err(Error::BadRange(format!("radius {r} must be non-negative")));
    }
    check_budget(q, r, budget)?;
    let rec = Recursion::new(q);
    let (lo, hi) = rec.top_range(r, true);
    let tops: Vec<i64> = (lo..=hi).collect();
    let counts = exec::ordered_map(&tops, |&t| {
        let mut n = 0u64;
        rec.run(r, t, true, &mut |_, _| n += 1);
        n
    });
    Ok(2 * counts.iter().sum::<u64>())
}

/// Distinct Q-values below a radius, ascending, with multiplicities.
#[derive(Clone, Debug, Default)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub mult: Vec<f64>,
    pub radius: f64,
    pub points: u64,
}

impl Spectrum {
    /// Number of distinct values ≤ r.
    pub fn prefix_len(&self, r: f64) -> usize {
        self.values.partition_point(|&v| v <= r)
    }

    pub fn points_below(&self, r: f64) -> u64 {
        self.mult[..self.prefix_len(r)].iter().map(|&m| m as u64).sum()
    }

    fn from_sorted(values: Vec<f64>, each: f64, radius: f64) -> Self {
        let mut vals = Vec::new();
        let mut mult: Vec<f64> = Vec::new();
        for v in values {
            match vals.last() {
                Some(&last) if last == v => *mult.last_mut().unwrap() += each,
                _ => {
                    vals.push(v);
                    mult.push(each);
                }
            }
        }
        let points = mult.iter().sum::<f64>() as u64;
        Spectrum { values: vals, mult, radius, points }
    }
}

/// Ascending sort of non-negative values (their bit patterns sort the same way
/// as integers, which is cheaper than a float comparator).
fn sort_values(v: Vec<f64>) -> Vec<f64> {
    let mut bits: Vec<u64> = v.into_iter().map(f64::to_bits).collect();
    #[cfg(feature = "parallel")]
    {
        if exec::current_exec() == exec::Exec::Parallel {
            use rayon::slice::ParallelSliceMut;
            bits.par_sort_unstable();
            return bits.into_iter().map(f64::from_bits).collect();
        }
    }
    bits.sort_unstable();
    bits.into_iter().map(f64::from_bits).collect()
}

/// Value spectrum by half-enumeration (each ±x pair counted with weight 2).
pub fn spectrum_by_enumeration(q: &QuadraticForm, r: f64, budget: f64) -> Result<Spectrum> {
    if !(r >= 0.0) {
        return Err(Error::BadRange(format!("radius {r} must be non-negative")));
    }
    check_budget(q, r, budget)?;
    let rec = Recursion::new(q);
    let (lo, hi) = rec.top_range(r, true);
    let tops: Vec<i64> = (lo..=hi).collect();
    let parts = exec::ordered_map(&tops, |&t| {
        let mut vals = Vec::new();
        rec.run(r, t, true, &mut |_, v| vals.push(v));
        vals
    });
    let mut all: Vec<f64> = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        all.extend(p);
    }
    Ok(Spectrum::from_sorted(sort_values(all), 2.0, r))
}

/// Coefficients of Π_i θ(d_i τ) up to n: out[n] = #{x ∈ Z^k : Σ d_i x_i² = n}.
fn theta_product(d: &[u64], n: usize) -> Vec<u128> {
    let mut acc = vec![0u128; n + 1];
    acc[0] = 1;
    for &di in d {
        let mut next = vec![0u128; n + 1];
        for (m, &a) in acc.iter().enumerate() {
            if a == 0 {
                continue;
            }
            next[m] += a;
            let mut x = 1u64;
            loop {
                let idx = m as u64 + di * x * x;
                if idx > n as u64 {
                    break;
                }
                next[idx as usize] += 2 * a;
                x += 1;
            }
        }
        acc = next;
    }
    acc
}

/// Value spectrum of an integral diagonal form by theta-series convolution.
pub fn spectrum_integral_diagonal(d: &[u64], r: f64) -> Spectrum {
    let n = r.max(0.0).floor() as usize;
    let counts = theta_product(d, n);
    let mut values = Vec::new();
    let mut mult = Vec::new();
    let mut points = 0u64;
    for (m, &c) in counts.iter().enumerate().skip(1) {
        if c > 0 {
            values.push(m as f64);
            mult.push(c as f64);
            points += c as u64;
        }
    }
    Spectrum { values, mult, radius: r, points }
}

/// Value spectrum below `r`, choosing the cheaper construction.
pub fn spectrum(q: &QuadraticForm, r: f64, budget: f64) -> Result<Spectrum> {
    if let Some(d) = convolvable(q, r) {
        check_budget(q, r, budget)?;
        return Ok(spectrum_integral_diagonal(&d, r));
    }
    spectrum_by_enumeration(q, r, budget)
}

/// r(n) = #{x ∈ Z^k : ‖x‖² = n}, 1 ≤ n ≤ N.
#[derive(Clone, Debug)]
pub struct RepCounts {
    pub k: usize,
    pub n: usize,
    /// counts[i] = r(i + 1)
    pub counts: Vec<u128>,
}

impl RepCounts {
    pub fn r(&self, n: usize) -> u128 {
        self.counts[n - 1]
    }
}

pub fn representation_counts(k: usize, n: usize) -> Result<RepCounts> {
    if k < 2 {
        return Err(Error::BadDimension(format!("k = {k} < 2")));
    }
    if n < 1 {
        return Err(Error::BadRange("N must be at least 1".into()));
    }
    let work = n as f64 * (n as f64).sqrt() * k as f64;
    if work > DEFAULT_BUDGET * 10.0 {
        return Err(Error::CutoffTooLarge { predicted: work, budget: DEFAULT_BUDGET * 10.0 });
    }
    let c = theta_product(&vec![1; k], n);
    Ok(RepCounts { k, n, counts: c[1..].to_vec() })
}

/// Shared values-only spectra keyed by form digest, bounded by the total
/// number of stored values (oldest entries evicted first).
pub struct LatticeCache {
    map: RwLock<HashMap<u64, Arc<Spectrum>>>,
    order: Mutex<VecDeque<u64>>,
    capacity: usize,
}

impl LatticeCache {
    pub fn new(capacity_values: usize) -> Self {
        LatticeCache { map: RwLock::new(HashMap::new()), order: Mutex::new(VecDeque::new()), capacity: capacity_values }
    }

    /// A spectrum of `q` covering at least radius `r`.
    pub fn get(&self, q: &QuadraticForm, r: f64, budget: f64) -> Result<Arc<Spectrum>> {
        let key = q.digest();
        if let Some(s) = self.map.read().unwrap().get(&key) {
            if s.radius >= r {
                return Ok(s.clone());
            }
        }
        let s = Arc::new(spectrum(q, r, budget)?);
        self.insert(key, s.clone());
        Ok(s)
    }

    fn insert(&self, key: u64, s: Arc<Spectrum>) {
        let mut map = self.map.write().unwrap();
        let mut order = self.order.lock().unwrap();
        if let Some(old) = map.get(&key) {
            if old.radius >= s.radius {
                return;
            }
        }
        map.insert(key, s);
        order.retain(|k| *k != key);
        order.push_back(key);
        let mut total: usize = map.values().map(|v| v.values.len()).sum();
        while total > self.capacity && order.len() > 1 {
            let victim = order.pop_front().unwrap();
            if let Some(v) = map.remove(&victim) {
                total -= v.values.len();
            }
        }
    }

    pub fn clear(&self) {
        self.map.write().unwrap().clear();
        self.order.lock().unwrap().clear();
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for LatticeCache {
    fn default() -> Self {
        LatticeCache::new(64_000_000)
    }
}
