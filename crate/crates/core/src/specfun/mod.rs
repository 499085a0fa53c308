//! Complex special functions.

mod dirichlet;
mod gamma;
mod incgamma;
mod zeta;

pub use dirichlet::{completed_l, dirichlet_l, is_fundamental_discriminant, kronecker_chi, parity};
pub(crate) use dirichlet::kronecker_raw;
pub use gamma::{gamma_r, log_gamma, log_gamma_r, log_gamma_real};
pub use incgamma::{
    choose_route, doubling_self_test, scaled_upper_gamma, scaled_upper_gamma_quadrature, upper_incomplete_gamma,
    GKernel, GTable, Route, IM_ENVELOPE,
};
pub use zeta::{hurwitz_zeta, riemann_zeta};

pub use num_complex::Complex64;

/// Parse a complex number written like `0.5+14.2i`, `-3i`, `2`, `1e-3-2.5i`.
pub fn parse_complex(text: &str) -> crate::Result<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || crate::Error::Parse(format!("cannot parse complex number '{text}'"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // Split at the last sign that is not part of an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                split = Some(i);
                break;
            }
        }
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, im))
    } else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// One invariant check of [`selftest`].
#[derive(Clone, Debug)]
pub struct SelfTestCase {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
}

impl SelfTestCase {
    pub fn passed(&self) -> bool {
        self.residual <= self.tol
    }
}

/// Reflection of ζ, the Γ(a, x) recurrence, the functional equation of
/// L(s, χ_D) and the quadrature doubling test at seeded random points.
pub fn selftest(seed: u64) -> Vec<SelfTestCase> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut push = |name: String, r: crate::Result<f64>, tol: f64| {
        out.push(SelfTestCase { name, residual: r.unwrap_or(f64::INFINITY), tol });
    };
    let pi = std::f64::consts::PI;
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..20 {
        let s = Complex64::new(rng.random_range(-3.0..4.0), rng.random_range(-100.0..100.0));
        let r = (|| {
            let z = riemann_zeta(s)?;
            let rhs = (s * 2f64.ln()).exp()
                * ((s - 1.0) * pi.ln()).exp()
                * (s * (pi / 2.0)).sin()
                * log_gamma(one - s)?.exp()
                * riemann_zeta(one - s)?;
            Ok((z - rhs).norm() / z.norm())
        })();
        push(format!("zeta reflection s={s:.4}"), r, 1e-9);
    }
    for _ in 0..20 {
        let a = Complex64::new(rng.random_range(0.2..6.0), rng.random_range(-40.0..40.0));
        let x: f64 = rng.random_range(0.1..30.0);
        let r = (|| {
            let g1 = upper_incomplete_gamma(a + 1.0, x)?;
            let g0 = upper_incomplete_gamma(a, x)?;
            let rhs = a * g0 + (a * x.ln() - x).exp();
            Ok((g1 - rhs).norm() / g1.norm().max(rhs.norm()))
        })();
        push(format!("incomplete gamma recurrence a={a:.3} x={x:.3}"), r, 1e-10);
    }
    for d in [-3i64, -4, 5, 8, -23, 13] {
        let s = Complex64::new(rng.random_range(-1.0..2.0), rng.random_range(-30.0..30.0));
        let r = (|| {
            let a = completed_l(s, d)?;
            let b = completed_l(one - s, d)?;
            Ok((a - b).norm() / a.norm())
        })();
        push(format!("L functional equation D={d} s={s:.3}"), r, 1e-9);
    }
    for (a, x) in [(Complex64::new(0.75, 20.0), 3.0), (Complex64::new(2.5, -60.0), 12.0)] {
        push(format!("quadrature doubling a={a} x={x}"), doubling_self_test(a, x), 1e-10);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_literals() {
        assert_eq!(parse_complex("0.5+14.2i").unwrap(), Complex64::new(0.5, 14.2));
        assert_eq!(parse_complex("0.5-14.2i").unwrap(), Complex64::new(0.5, -14.2));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("-3i").unwrap(), Complex64::new(0.0, -3.0));
        assert_eq!(parse_complex("1e-3+2e1i").unwrap(), Complex64::new(1e-3, 20.0));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert!(parse_complex("abc").is_err());
    }
}
