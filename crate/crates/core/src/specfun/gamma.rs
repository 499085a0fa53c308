use num_complex::Complex64 as C;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// B_{2n} for n = 1..=20.
pub(crate) const BERNOULLI_2N: [f64; 20] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
    -7709321041217.0 / 510.0,
    2577687858367.0 / 6.0,
    -26315271553053477373.0 / 1919190.0,
    2929993913841559.0 / 6.0,
    -261082718496449122051.0 / 13530.0,
];

fn is_nonpositive_integer(z: C) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Stirling series, valid for |z| >= 12 and Re z >= 0.
fn stirling(z: C) -> C {
    let inv = z.inv();
    let inv2 = inv * inv;
    // Horner over the first ten correction terms B_{2n} / (2n (2n-1) z^{2n-1}).
    let mut acc = C::new(0.0, 0.0);
    for n in (1..=10).rev() {
        let b = BERNOULLI_2N[n - 1] / ((2 * n) as f64 * (2 * n - 1) as f64);
        acc = acc * inv2 + b;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + acc * inv
}

/// Principal branch of ln Γ(z) (continuous off the negative real axis).
pub fn log_gamma(z: C) -> Result<C> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::BadRange(format!("non-finite argument {z}")));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(format!("{}", z.re)));
    }
    let mut shift = C::new(0.0, 0.0);
    let mut w = z;
    while w.re < 0.0 || w.norm() < 12.0 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

/// ln Γ for real x > 0.
pub fn log_gamma_real(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    log_gamma(C::new(x, 0.0)).map(|v| v.re).unwrap_or(f64::INFINITY)
}

/// ln Γ_R(s) = -(s/2) ln π + ln Γ(s/2).
pub fn log_gamma_r(s: C) -> Result<C> {
    let h = s * 0.5;
    if is_nonpositive_integer(h) {
        return Err(Error::Pole(format!("{s}")));
    }
    Ok(-h * PI.ln() + log_gamma(h)?)
}

/// Γ_R(s) = π^{-s/2} Γ(s/2), assembled in log space.
pub fn gamma_r(s: C) -> Result<C> {
    Ok(log_gamma_r(s)?.exp())
}
