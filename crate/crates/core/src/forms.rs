//! Positive-definite quadratic forms Q(x) = xᵀ Z x.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct QuadraticForm {
    k: usize,
    gram: Vec<f64>,
    inv: Vec<f64>,
    chol: Vec<f64>,
    det: f64,
    lambda_min: f64,
    lambda_max: f64,
    digest: u64,
}

/// On-disk representation: `{"k": 3, "gram": [[...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormFile {
    pub k: usize,
    pub gram: Vec<Vec<f64>>,
}

/// Lower-triangular L with A = L Lᵀ (row-major). Fails on a non-positive pivot.
fn cholesky(k: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Ok(l)
}

/// Inverse of A = L Lᵀ given L (exact reciprocals when A is diagonal).
fn chol_inverse(k: usize, a: &[f64], l: &[f64]) -> Vec<f64> {
    if (0..k).all(|i| (0..k).all(|j| i == j || a[i * k + j] == 0.0)) {
        let mut inv = vec![0.0; k * k];
        for i in 0..k {
            inv[i * k + i] = 1.0 / a[i * k + i];
        }
        return inv;
    }
    // M = L^{-1} by forward substitution, then A^{-1} = Mᵀ M.
    let mut m = vec![0.0; k * k];
    for c in 0..k {
        for i in c..k {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for p in c..i {
                s -= l[i * k + p] * m[p * k + c];
            }
            m[i * k + c] = s / l[i * k + i];
        }
    }
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = 0.0;
            for p in i.max(j)..k {
                s += m[p * k + i] * m[p * k + j];
            }
            inv[i * k + j] = s;
            inv[j * k + i] = s;
        }
    }
    inv
}

/// Extreme eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(k: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                off += m[i * k + j] * m[i * k + j];
            }
        }
        if off.sqrt() <= 1e-10 * scale * 1e-3 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = m[p * k + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * k + q] - m[p * k + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let arp = m[r * k + p];
                    let arq = m[r * k + q];
                    m[r * k + p] = c * arp - s * arq;
                    m[r * k + q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let apr = m[p * k + r];
                    let aqr = m[q * k + r];
                    m[p * k + r] = c * apr - s * aqr;
                    m[q * k + r] = s * apr + c * aqr;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..k).map(|i| m[i * k + i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn digest_of(k: usize, gram: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    k.hash(&mut h);
    for v in gram {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

impl QuadraticForm {
    fn build(k: usize, gram: Vec<f64>, inv: Option<Vec<f64>>) -> Result<Self> {
        let chol = cholesky(k, &gram)?;
        let det = (0..k).map(|i| chol[i * k + i] * chol[i * k + i]).product();
        let inv = inv.unwrap_or_else(|| chol_inverse(k, &gram, &chol));
        let ev = jacobi_eigenvalues(k, &gram);
        let digest = digest_of(k, &gram);
        Ok(QuadraticForm { k, gram, inv, chol, det, lambda_min: ev[0], lambda_max: ev[k - 1], digest })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Entry Z_{ij}.
    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.k + j]
    }

    /// Row-major Gram matrix.
    pub fn gram_matrix(&self) -> &[f64] {
        &self.gram
    }

    pub fn gram_rows(&self) -> Vec<Vec<f64>> {
        self.gram.chunks(self.k).map(|r| r.to_vec()).collect()
    }

    /// Row-major Cholesky factor L (Z = L Lᵀ).
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// Stable identifier of the Gram matrix bits.
    pub fn digest(&self) -> u64 {
        self.digest
    }

    /// Q(x) = Σ Z_ii x_i² + 2 Σ_{i<j} Z_ij x_i x_j.
    pub fn value(&self, x: &[i64]) -> f64 {
        let k = self.k;
        let mut s = 0.0;
        for i in 0..k {
            let xi = x[i] as f64;
            let mut row = 0.5 * self.gram[i * k + i] * xi;
            for j in (i + 1)..k {
                row += self.gram[i * k + j] * x[j] as f64;
            }
            s += 2.0 * xi * row;
        }
        s
    }

    /// Positive integer diagonal entries, if the form is integral and diagonal.
    pub fn integral_diagonal(&self) -> Option<Vec<u64>> {
        let k = self.k;
        let mut d = Vec::with_capacity(k);
        for i in 0..k {
            for j in 0..k {
                let v = self.gram[i * k + j];
                if i == j {
                    if v.fract() != 0.0 || v < 1.0 || v > 1e6 {
                        return None;
                    }
                    d.push(v as u64);
                } else if v != 0.0 {
                    return None;
                }
            }
        }
        Some(d)
    }

    pub fn is_diagonal(&self) -> bool {
        let k = self.k;
        (0..k).all(|i| (0..k).all(|j| i == j || self.gram[i * k + j] == 0.0))
    }

    /// The form c·Z.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        make_form_flat(self.k, self.gram.iter().map(|v| v * c).collect())
    }

    /// The form Uᵀ Z U for an integer matrix U (row-major).
    pub fn transformed(&self, u: &[i64]) -> Result<Self> {
        let k = self.k;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                let mut s = 0.0;
                for p in 0..k {
                    for q in 0..k {
                        s += u[p * k + i] as f64 * self.gram[p * k + q] * u[q * k + j] as f64;
                    }
                }
                out[i * k + j] = s;
            }
        }
        make_form_flat(k, out)
    }

    pub fn to_file(&self) -> FormFile {
        FormFile { k: self.k, gram: self.gram_rows() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("form serializes")
    }
}

fn make_form_flat(k: usize, mut g: Vec<f64>) -> Result<QuadraticForm> {
    if k < 2 {
        return Err(Error::BadDimension(format!("k = {k} < 2")));
    }
    if g.len() != k * k {
        return Err(Error::BadDimension(format!("expected {} entries, got {}", k * k, g.len())));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadRange("non-finite gram entry".into()));
    }
    let mut asym = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            asym = asym.max((g[i * k + j] - g[j * k + i]).abs());
        }
    }
    if asym > SYM_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let m = 0.5 * (g[i * k + j] + g[j * k + i]);
            g[i * k + j] = m;
            g[j * k + i] = m;
        }
    }
    QuadraticForm::build(k, g, None)
}

/// Validate and build a form from a k×k Gram matrix.
pub fn make_form(k: usize, gram: &[Vec<f64>]) -> Result<QuadraticForm> {
    if gram.len() != k || gram.iter().any(|r| r.len() != k) {
        if k < 2 {
            return Err(Error::BadDimension(format!("k = {k} < 2")));
        }
        return Err(Error::BadDimension(format!("gram is not {k}×{k}")));
    }
    make_form_flat(k, gram.iter().flatten().copied().collect())
}

pub fn identity(k: usize) -> QuadraticForm {
    diagonal(&vec![1.0; k]).expect("identity is positive definite")
}

pub fn diagonal(d: &[f64]) -> Result<QuadraticForm> {
    let k = d.len();
    let mut g = vec![0.0; k * k];
    for (i, v) in d.iter().enumerate() {
        g[i * k + i] = *v;
    }
    make_form_flat(k, g)
}

/// The form with Gram matrix Z⁻¹. Inverting twice returns the original bits.
pub fn inverse_form(q: &QuadraticForm) -> QuadraticForm {
    QuadraticForm::build(q.k, q.inv.clone(), Some(q.gram.clone())).expect("inverse of a positive-definite form")
}

/// Diagonal form with entries uniform in [lo, hi] from a seeded ChaCha8 stream.
pub fn random_diagonal_form(k: usize, lo: f64, hi: f64, seed: u64) -> Result<QuadraticForm> {
    if !(lo > 0.0) || lo > hi || !hi.is_finite() {
        return Err(Error::BadRange(format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    if k < 2 {
        return Err(Error::BadDimension(format!("k = {k} < 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: Vec<f64> = (0..k).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect();
    diagonal(&d)
}

/// Random dense form of determinant 1: diagonal in [1, 2], correlations in
/// [-0.3, 0.3], rescaled; binary forms come back Gauss-reduced.
pub fn random_unit_form(k: usize, seed: u64) -> Result<QuadraticForm> {
    if k < 2 {
        return Err(Error::BadDimension(format!("k = {k} < 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let d: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..=2.0)).collect();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            g[i * k + i] = d[i];
            for j in 0..i {
                let v = rng.random_range(-0.3..=0.3) * (d[i] * d[j]).sqrt();
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        let Ok(q) = make_form_flat(k, g) else { continue };
        let q = q.scaled(q.det().powf(-1.0 / k as f64))?;
        return if k == 2 { reduce_binary(&q).map(|r| r.0) } else { Ok(q) };
    }
}

/// Product of `steps` random elementary integer matrices (row additions
/// with multiplier ±1 and row swaps), flattened row-major.
pub fn random_unimodular(k: usize, steps: usize, seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0i64; k * k];
    for i in 0..k {
        u[i * k + i] = 1;
    }
    if k < 2 {
        return u;
    }
    for _ in 0..steps {
        let i = rng.random_range(0..k);
        let j = (i + rng.random_range(1..k)) % k;
        if rng.random_bool(0.25) {
            for c in 0..k {
                u.swap(i * k + c, j * k + c);
            }
        } else {
            let m = if rng.random_bool(0.5) { 1 } else { -1 };
            for c in 0..k {
                u[i * k + c] += m * u[j * k + c];
            }
        }
    }
    u
}

/// Gauss reduction of a binary form to |b| ≤ a ≤ c (b = 2 Z₁₂).
/// Returns the reduced form and U with Z_red = Uᵀ Z U.
pub fn reduce_binary(q: &QuadraticForm) -> Result<(QuadraticForm, [[i64; 2]; 2])> {
    if q.k != 2 {
        return Err(Error::Dimension { expected: 2, got: q.k });
    }
    let mut a = q.gram(0, 0);
    let mut b = 2.0 * q.gram(0, 1);
    let mut c = q.gram(1, 1);
    let mut u = [[1i64, 0], [0, 1]];
    let tol = 1e-12 * (a.abs() + b.abs() + c.abs());
    for _ in 0..10_000 {
        // b into (-a, a]: e2 <- e2 - m e1.
        let m = ((b - a) / (2.0 * a)).ceil();
        if m != 0.0 {
            let mi = m as i64;
            c = a * m * m - b * m + c;
            b -= 2.0 * m * a;
            u = [[u[0][0], u[0][1] - mi * u[0][0]], [u[1][0], u[1][1] - mi * u[1][0]]];
        }
        if c < a - tol {
            // (e1, e2) <- (e2, -e1): (a, b, c) -> (c, -b, a).
            std::mem::swap(&mut a, &mut c);
            b = -b;
            u = [[u[0][1], -u[0][0]], [u[1][1], -u[1][0]]];
            continue;
        }
        break;
    }
    if (a - c).abs() <= tol && b < 0.0 {
        b = -b;
        u = [[u[0][1], -u[0][0]], [u[1][1], -u[1][0]]];
    }
    let red = make_form(2, &[vec![a, 0.5 * b], vec![0.5 * b, c]])?;
    Ok((red, u))
}

pub fn load_form(path: &Path) -> Result<QuadraticForm> {
    let text = std::fs::read_to_string(path)?;
    form_from_json(&text)
}

pub fn form_from_json(text: &str) -> Result<QuadraticForm> {
    let f: FormFile = serde_json::from_str(text)?;
    make_form(f.k, &f.gram)
}

pub fn save_form(q: &QuadraticForm, path: &Path) -> Result<()> {
    std::fs::write(path, q.to_json())?;
    Ok(())
}
