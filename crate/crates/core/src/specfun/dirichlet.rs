//! Real primitive characters χ_D and their L-functions.

use num_complex::Complex64 as C;

use super::gamma::log_gamma;
use super::zeta::{hurwitz_em, riemann_zeta};
use crate::accum::CAcc;
use crate::error::{Error, Result};

fn squarefree(mut m: u64) -> bool {
    if m == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// Discriminant of a quadratic field (D ≡ 1 mod 4 squarefree, or D = 4m with
/// m ≡ 2, 3 mod 4 squarefree). D = 1 is not included.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let r = d.rem_euclid(4);
    if r == 1 {
        return squarefree(d.unsigned_abs());
    }
    if r == 0 {
        let m = d / 4;
        let mr = m.rem_euclid(4);
        return (mr == 2 || mr == 3) && squarefree(m.unsigned_abs());
    }
    false
}

fn validate(d: i64) -> Result<()> {
    if d == 1 || is_fundamental_discriminant(d) {
        Ok(())
    } else {
        Err(Error::BadDiscriminant(d))
    }
}

/// Jacobi symbol (a | n) for odd n > 0.
fn jacobi(a: i64, n: i64) -> i8 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut r = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let m = n % 8;
            if m == 3 || m == 5 {
                r = -r;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            r = -r;
        }
        a %= n;
    }
    if n == 1 {
        r
    } else {
        0
    }
}

/// Kronecker symbol (D | n) without validating D.
pub(crate) fn kronecker_raw(d: i64, n: i64) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut r = 1i8;
    let mut n = n;
    if n < 0 {
        n = -n;
        if d < 0 {
            r = -r;
        }
    }
    while n % 2 == 0 {
        n /= 2;
        if d % 2 == 0 {
            return 0;
        }
        let m = d.rem_euclid(8);
        if m == 3 || m == 5 {
            r = -r;
        }
    }
    if n == 1 {
        return r;
    }
    r * jacobi(d, n)
}

/// Kronecker symbol (D | n) for a fundamental discriminant D (or D = 1).
pub fn kronecker_chi(d: i64, n: i64) -> Result<i8> {
    validate(d)?;
    Ok(kronecker_raw(d, n))
}

/// Parity a ∈ {0, 1} of χ_D: χ_D(-1) = (-1)^a.
pub fn parity(d: i64) -> u8 {
    if d < 0 {
        1
    } else {
        0
    }
}

/// L(s, χ_D). D = 1 gives ζ(s).
pub fn dirichlet_l(s: C, d: i64) -> Result<C> {
    validate(d)?;
    if d == 1 {
        return riemann_zeta(s);
    }
    let q = d.unsigned_abs();
    if d.unsigned_abs() > 100_000 {
        return Err(Error::BadRange(format!("|D| = {q} exceeds 1e5")));
    }
    let em = (0.5 * s.norm()).ceil().max(12.0);
    if s.re > 1.5 {
        // Direct series when its tail drops below 1e-17 quickly enough.
        let n_direct = ((1e17 * (s.re - 1.0)).ln() / (s.re - 1.0)).exp();
        if n_direct <= q as f64 * (em + 20.0) {
            return Ok(direct_l(s, d, n_direct.ceil() as u64));
        }
    }
    Ok(hurwitz_l(s, d))
}

fn direct_l(s: C, d: i64, n: u64) -> C {
    let mut acc = CAcc::new();
    for m in 1..=n {
        let c = kronecker_raw(d, m as i64);
        if c != 0 {
            acc.add((-s * (m as f64).ln()).exp() * c as f64);
        }
    }
    acc.value()
}

pub(crate) fn hurwitz_l(s: C, d: i64) -> C {
    let q = d.unsigned_abs();
    let qf = q as f64;
    let n = (0.5 * s.norm()).ceil().max(12.0) as usize;
    let mut acc = CAcc::new();
    for a in 1..=q {
        let c = kronecker_raw(d, a as i64);
        if c != 0 {
            acc.add(hurwitz_em(s, a as f64 / qf, n) * c as f64);
        }
    }
    (-s * qf.ln()).exp() * acc.value()
}

/// Completed L-function Λ(s) = (|D|/π)^{(s+a)/2} Γ((s+a)/2) L(s, χ_D);
/// satisfies Λ(s) = Λ(1 - s) for real primitive χ_D.
pub fn completed_l(s: C, d: i64) -> Result<C> {
    let a = parity(d) as f64;
    let h = (s + a) * 0.5;
    let pre = (h * (d.unsigned_abs() as f64 / std::f64::consts::PI).ln() + log_gamma(h)?).exp();
    Ok(pre * dirichlet_l(s, d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_chi(-4, 3).unwrap(), -1);
        assert_eq!(kronecker_chi(-4, 2).unwrap(), 0);
        assert_eq!(kronecker_chi(5, 2).unwrap(), -1);
        assert!(matches!(kronecker_chi(12 * 4, 1), Err(Error::BadDiscriminant(_))));
    }

    #[test]
    fn fundamental_discriminants_small_table() {
        let pos: Vec<i64> = (2..=50).filter(|&d| is_fundamental_discriminant(d)).collect();
        assert_eq!(pos, vec![5, 8, 12, 13, 17, 21, 24, 28, 29, 33, 37, 40, 41, 44]);
        let neg: Vec<i64> = (-50..0).rev().filter(|&d| is_fundamental_discriminant(d)).collect();
        assert_eq!(neg, vec![-3, -4, -7, -8, -11, -15, -19, -20, -23, -24, -31, -35, -39, -40, -43, -47]);
    }

    #[test]
    fn character_is_multiplicative_and_periodic() {
        for d in [-4i64, 5, -8, 8, 12, -23, 41, -40] {
            let q = d.abs();
            for m in 1..60 {
                for n in 1..60 {
                    assert_eq!(kronecker_raw(d, m * n), kronecker_raw(d, m) * kronecker_raw(d, n));
                }
                assert_eq!(kronecker_raw(d, m), kronecker_raw(d, m + q));
            }
            assert_eq!(kronecker_raw(d, -1), if d < 0 { -1 } else { 1 });
        }
    }

    #[test]
    fn l_values() {
        let l1 = dirichlet_l(C::new(1.0, 0.0), -4).unwrap();
        assert!((l1 - PI / 4.0).norm() < 1e-13);
        let l2 = dirichlet_l(C::new(2.0, 0.0), -4).unwrap();
        assert!((l2.re - 0.915_965_594_177_219).abs() < 1e-14);
        let s = C::new(0.3, 4.0);
        assert!((dirichlet_l(s, 1).unwrap() - riemann_zeta(s).unwrap()).norm() < 1e-15);
        assert!(dirichlet_l(C::new(1.0, 0.0), 1).is_err());
    }

    #[test]
    fn high_precision_references() {
        let refs = [
            ((2.0, 0.0), -4, (9.1596559417721901505e-1, 0.0)),
            ((0.5, 50.0), -4, (5.8822037602607150766e-1, 7.8500434648372980206e-1)),
            ((0.5, -30.0), 8, (-5.2333316928012538391e-3, -2.5543681330944333604e-1)),
            ((0.3, 100.0), -8, (4.137309656556777061e-1, -2.9803202211345928382)),
            ((0.5, 7.0), 5, (2.9232336130663658038e-1, 4.761150863937751767e-1)),
            ((2.0, 1.0), -3, (8.1840603824279478225e-1, 1.2970757904656331133e-1)),
            ((-0.5, 600.0), -4, (-2.0233779731315848269e2, -2.2047512335297096859e2)),
            ((0.5, 0.0), 12, (4.9855700245781543616e-1, 0.0)),
        ];
        for ((sr, si), d, (vr, vi)) in refs {
            let got = dirichlet_l(C::new(sr, si), d).unwrap();
            let want = C::new(vr, vi);
            assert!((got - want).norm() / want.norm() < 1e-11, "L({sr}+{si}i, {d}) = {got}, want {want}");
        }
    }

    #[test]
    fn direct_and_hurwitz_paths_agree() {
        for d in [-4i64, 5, -3, 8, -7] {
            let s = C::new(9.0, 2.5);
            let a = direct_l(s, d, 20_000);
            let b = hurwitz_l(s, d);
            assert!((a - b).norm() < 1e-14, "D = {d}");
        }
    }

    #[test]
    fn functional_equation() {
        for d in [-4i64, 8, -8] {
            for &(sr, si) in &[(0.3, 5.0), (0.5, 60.0), (0.9, -99.0), (-0.4, 20.0)] {
                let s = C::new(sr, si);
                let a = completed_l(s, d).unwrap();
                let b = completed_l(1.0 - s, d).unwrap();
                assert!((a - b).norm() / a.norm() < 1e-10, "D = {d}, s = {s}: {a} vs {b}");
            }
        }
    }
}
