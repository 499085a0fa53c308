//! Compensated accumulators.
//!
//! Every lattice sum in the crate goes through [`Acc`] / [`CAcc`]. The default
//! build uses Neumaier summation; with the `double-double` feature the running
//! total is kept as an unevaluated pair renormalised after each addition.

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Acc {
    hi: f64,
    lo: f64,
}

impl Acc {
    pub const fn new() -> Self {
        Acc { hi: 0.0, lo: 0.0 }
    }

    #[cfg(not(feature = "double-double"))]
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.hi + x;
        if self.hi.abs() >= x.abs() {
            self.lo += (self.hi - t) + x;
        } else {
            self.lo += (x - t) + self.hi;
        }
        self.hi = t;
    }

    #[cfg(feature = "double-double")]
    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let e = e + self.lo;
        let (hi, lo) = two_sum(s, e);
        self.hi = hi;
        self.lo = lo;
    }

    /// Merge another partial sum (both parts, so no compensation is lost).
    #[inline]
    pub fn merge(&mut self, other: &Acc) {
        self.add(other.hi);
        self.add(other.lo);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        let (s, _) = two_sum(self.hi, self.lo);
        s
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CAcc {
    pub re: Acc,
    pub im: Acc,
}

impl CAcc {
    pub const fn new() -> Self {
        CAcc { re: Acc::new(), im: Acc::new() }
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn merge(&mut self, other: &CAcc) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated sum of a slice, in slice order.
pub fn sum(xs: &[f64]) -> f64 {
    let mut a = Acc::new();
    for &x in xs {
        a.add(x);
    }
    a.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_mass() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(&xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (1..2000).map(|i| 1.0 / (i as f64) * if i % 3 == 0 { -1e8 } else { 1.0 }).collect();
        let whole = sum(&xs);
        let mut a = Acc::new();
        let mut b = Acc::new();
        for x in &xs[..700] {
            a.add(*x);
        }
        for x in &xs[700..] {
            b.add(*x);
        }
        a.merge(&b);
        assert!((a.value() - whole).abs() <= 1e-15 * whole.abs().max(1.0));
    }
}
