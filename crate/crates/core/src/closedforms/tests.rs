use super::*;
use crate::epstein::{evaluate, evaluate_direct};
use crate::specfun::is_fundamental_discriminant;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn jacobi_four_squares() {
    let r = representation_counts(4, 500).unwrap();
    for n in 1..=500usize {
        let want: u128 = (1..=n).filter(|d| n % d == 0 && d % 4 != 0).map(|d| 8 * d as u128).sum();
        assert_eq!(r.r(n), want, "n = {n}");
    }
}

#[test]
fn k4_matches_lattice() {
    let d = evaluate_direct(&identity(4), c(2.0, 0.0), 1e-12).unwrap();
    assert!((closed_form_k4(c(2.0, 0.0)).unwrap() - d.value).norm() < 1e-10);
    let s = c(0.5, 10.0);
    let g = evaluate(&identity(4), s).unwrap();
    assert!(rel(closed_form_k4(s).unwrap(), g.value) < 1e-8);
    // The printed variant 8(1 − 2^{1−2s}) ζ(2s) ζ(1 − 2s) is far off at s = 2.
    let s2 = c(2.0, 0.0);
    let printed = (one() - (one() - s2 * 2.0).scale(2f64.ln()).exp())
        * riemann_zeta(s2 * 2.0).unwrap()
        * riemann_zeta(one() - s2 * 2.0).unwrap()
        * 8.0;
    assert!(rel(printed, d.value) > 0.5);
}

#[test]
fn k4_removable_point() {
    let at = closed_form_k4(c(0.5, 0.0)).unwrap();
    assert!((at.re + 4.0 * 4f64.ln()).abs() < 1e-12);
    let near = closed_form_k4(c(0.5 + 1e-4, 0.0)).unwrap();
    assert!((near - at).norm() < 1e-2);
    let g = evaluate(&identity(4), c(0.5, 0.0)).unwrap();
    assert!(rel(at, g.value) < 1e-9, "{at} vs {}", g.value);
    assert_eq!(closed_form_k4(c(1.0, 0.0)).unwrap_err(), Error::PoleAt1);
}

fn synthetic(k: usize, f: impl Fn(C) -> C) -> (Vec<(C, C)>, Vec<(C, C)>) {
    let pts = fit_points();
    let model: Vec<(C, C)> = pts.iter().map(|&s| (s, riemann_zeta(s * 1.5).unwrap())).collect();
    let oracle = model.iter().map(|&(s, m)| (s, m * f(pow2_neg(s * (k as f64 / 2.0))))).collect();
    (oracle, model)
}

#[test]
fn fit_exact_ratio() {
    let (o, m) = synthetic(4, |_| c(3.0, 0.0));
    let fm = fit_constants(&o, &m, 0, 4).unwrap();
    assert!((fm.c - 3.0).norm() < 1e-14);
    assert!(fm.max_residual() < 1e-14);
    assert_eq!(fm.poly, vec![one()]);
}

#[test]
fn fit_recovers_polynomial() {
    let (o, m) = synthetic(4, |x| (one() - x * x * 4.0) * 8.0);
    let fm = fit_constants(&o, &m, 2, 4).unwrap().rounded(64);
    assert_eq!(fm.c, c(8.0, 0.0));
    assert_eq!(fm.poly, vec![one(), c(0.0, 0.0), c(-4.0, 0.0)]);
}

#[test]
fn fit_with_noise() {
    let (mut o, m) = synthetic(4, |_| one());
    for (i, v) in o.iter_mut().enumerate() {
        v.1 += v.1 * 1e-12 * if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    let fm = fit_constants(&o, &m, 0, 4).unwrap();
    assert!((fm.c - 1.0).norm() < 1e-11);
}

#[test]
fn fit_failures() {
    let (mut o, m) = synthetic(4, |_| one());
    for v in o.iter_mut().skip(6) {
        v.1 *= 2.0;
    }
    assert!(matches!(fit_constants(&o, &m, 0, 4), Err(Error::FitFailed(_))));
    let same: Vec<(C, C)> = (0..5).map(|_| (c(2.0, 0.0), c(1.0, 0.0))).collect();
    assert!(matches!(fit_constants(&same, &same, 1, 4), Err(Error::Singular(_))));
    assert!(matches!(fit_constants(&same[..2], &same[..2], 1, 4), Err(Error::BadRange(_))));
}

#[test]
fn rational_rounding() {
    assert_eq!(round_rational(3.999_999_999_9, 64), 4.0);
    assert_eq!(round_rational(-0.333_333_333_34, 64), -1.0 / 3.0);
    assert_eq!(round_rational(std::f64::consts::PI, 64), std::f64::consts::PI);
}

#[test]
fn fitted_mod4_0_constants() {
    let f4 = fit_mod4_0(4).unwrap();
    assert_eq!(f4.c, c(8.0, 0.0));
    assert_eq!(f4.poly, vec![one(), c(0.0, 0.0), c(-4.0, 0.0)]);
    let f8 = fit_mod4_0(8).unwrap();
    assert_eq!(f8.c, c(16.0, 0.0));
    assert_eq!(f8.poly, vec![one(), c(-2.0, 0.0), c(16.0, 0.0)]);
    for f in [&f4, &f8] {
        assert!(f.c.re > 0.0 && f.is_real(0.0));
        assert_eq!(f.poly[0], one());
        assert!(f.max_residual() <= FIT_TOL);
    }
    assert!(matches!(fit_mod4_0(12), Err(Error::BadK(12))));
}

#[test]
fn mod4_0_agrees_with_k4_and_lattice() {
    for s in [c(0.5, 10.0), c(0.3, -4.0), c(2.0, 1.0), c(0.5, 0.0)] {
        let a = eisenstein_mod4_0(4, s).unwrap();
        let b = closed_form_k4(s).unwrap();
        assert!(rel(a, b) < 1e-10, "{s}: {a} vs {b}");
    }
    let s = c(2.0, 3.3);
    let d = evaluate_direct(&identity(8), s, 1e-12).unwrap();
    assert!(rel(eisenstein_mod4_0(8, s).unwrap(), d.value) < 1e-8);
    // s = 1/4 is removable for k = 8: ζ(2s) has a pole, ζ(2s − 3) a zero.
    let g = evaluate(&identity(8), c(0.25, 0.0)).unwrap();
    assert!(rel(eisenstein_mod4_0(8, c(0.25, 0.0)).unwrap(), g.value) < 1e-8);
}

#[test]
fn mod4_2_constant_and_values() {
    let f6 = fit_mod4_2(6).unwrap();
    assert!((f6.c - 4.0).norm() < 1e-9, "{}", f6.c);
    let f2 = fit_mod4_2(2).unwrap();
    assert!((f2.c - 2.0).norm() < 1e-9, "{}", f2.c);
    assert_eq!(mod4_2_coefficients(6, 4.0, 2), vec![12.0, 60.0]);
    let s = c(2.0, -2.2);
    let d = evaluate_direct(&identity(6), s, 1e-12).unwrap();
    assert!(rel(eisenstein_mod4_2(6, s).unwrap(), d.value) < 1e-8);
    for s in [c(0.5, 17.0), c(0.5, -60.0), c(1.0 / 3.0, 0.0)] {
        let g = evaluate(&identity(6), s).unwrap();
        assert!(rel(eisenstein_mod4_2(6, s).unwrap(), g.value) < 1e-7, "{s}");
    }
    assert!(matches!(eisenstein_mod4_2(10, s), Err(Error::BadK(10))));
}

#[test]
fn critical_line_closed_forms() {
    for k in [4usize, 6, 8] {
        for t in [-90.5, -33.0, 7.25, 51.0, 99.0] {
            let s = c(0.5, t);
            let g = evaluate(&identity(k), s).unwrap();
            let f = closed_form(k, s).unwrap();
            assert!(rel(f, g.value) < 1e-7, "k={k} t={t}: {f} vs {}", g.value);
        }
    }
}

#[test]
fn discriminant_sieve() {
    let pos: Vec<i64> = vec![1, 5, 8, 12, 13, 17, 21, 24, 28, 29, 33, 37, 40, 41, 44];
    let neg: Vec<i64> = vec![-3, -4, -7, -8, -11, -15, -19, -20, -23, -24, -31, -35, -39, -40, -43, -47];
    assert_eq!(fundamental_discriminants(1, 50), pos);
    assert_eq!(fundamental_discriminants(-1, 50), neg);
    for sign in [1i64, -1] {
        let list = fundamental_discriminants(sign, 3000);
        let want: Vec<i64> =
            (1..=3000i64).map(|a| sign * a).filter(|&d| d == 1 || is_fundamental_discriminant(d)).collect();
        assert_eq!(list, want);
    }
}

#[test]
fn bernoulli_l_values() {
    let pi = std::f64::consts::PI;
    assert!((l_at_integer(3, -4).unwrap() - pi.powi(3) / 32.0).abs() < 1e-15);
    assert!((l_at_integer(2, 5).unwrap() - 4.0 * pi * pi / (25.0 * 5f64.sqrt())).abs() < 1e-15);
    for d in [5i64, 8, 12, 13, 17, 101, 1009, 1, -3, -4, -7, -23, -103, -1003] {
        let n = if d < 0 { 3 } else { 2 };
        let a = l_at_integer(n, d).unwrap();
        let b = dirichlet_l(c(n as f64, 0.0), d).unwrap();
        assert!((a - b.re).abs() < 1e-12 * b.re.abs(), "D={d}: {a} vs {b}");
    }
    assert!(l_at_integer(2, -4).is_err());
}

#[test]
fn cohen_series_contracts() {
    let a = cohen_series(5, c(2.0, 0.0), 1000).unwrap();
    let b = cohen_series(5, c(2.0, 0.0), 2000).unwrap();
    assert!(a.value.norm() > 0.0 && a.value.is_finite());
    assert!((a.value - b.value).norm() <= a.tail);
    assert!(b.tail < a.tail);
    let d = evaluate_direct(&identity(5), c(2.0, 0.0), 1e-10).unwrap();
    let ratio = d.value / a.value;
    assert!(ratio.is_finite() && ratio.norm() > 0.0);
    let m = cohen_series(7, c(2.0, 1.0), 500).unwrap();
    assert!(m.terms == fundamental_discriminants(-1, 500).len());
    assert!(matches!(cohen_series(5, c(0.6, 0.0), 1000), Err(Error::NotConvergent(_))));
    assert!(matches!(cohen_series(6, c(2.0, 0.0), 1000), Err(Error::BadK(6))));
    let p = CohenParams::new(7).unwrap();
    assert_eq!(p.beta, 1.0 - p.alpha);
    assert_eq!(p.w(one()), one());
}
