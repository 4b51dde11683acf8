//! Bracketing root finder and one-dimensional maximizer.

use crate::{Error, Result};

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("interval [{lo}, {hi}] requires lo < hi")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

const MAX_BRENT_ITER: usize = 200;

/// Brent's method.
///
/// Stops once `|f(x)| <= tol`, or when the bracket has shrunk to the
/// resolution of the floating-point grid around the iterate.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Interval, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo: a, hi: b });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_BRENT_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol || xm.abs() <= tol1 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NoConvergence { what: "brent_root", iterations: MAX_BRENT_ITER })
}

/// Golden-section search for the maximum of a unimodal function on
/// `bracket`, returning the abscissa once the bracket is narrower than `tol`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, bracket: Interval, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interval_requires_order() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(Interval::new(-1.0, 1.0).is_ok());
    }

    #[test]
    fn brent_examples() {
        let r = brent_root(|x| x - 0.3, Interval::new(0.0, 1.0).unwrap(), 1e-14).unwrap();
        assert!((r - 0.3).abs() < 1e-14);
        let r = brent_root(|x| x * x * x - 2.0, Interval::new(1.0, 2.0).unwrap(), 1e-12).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-10);
        let r = brent_root(f64::cos, Interval::new(1.0, 2.0).unwrap(), 1e-12).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn brent_requires_sign_change() {
        let err = brent_root(|x| x * x + 1.0, Interval::new(-1.0, 1.0).unwrap(), 1e-10);
        assert!(matches!(err, Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let x = golden_section_max(|x| -(x - 3.7) * (x - 3.7), Interval::new(1.0, 30.0).unwrap(), 1e-6);
        assert!((x - 3.7).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn brent_residual_on_random_cubics(r in -5.0f64..5.0, a in 0.1f64..3.0, b in -2.0f64..2.0, w in 0.1f64..4.0) {
            // (x - r) * (a x^2 + b x + c) with a positive-definite quadratic factor
            let c = b * b / (4.0 * a) + 0.5;
            let f = |x: f64| (x - r) * (a * x * x + b * x + c);
            let bracket = Interval::new(r - w, r + 0.7 * w).unwrap();
            let tol = 1e-9;
            let root = brent_root(f, bracket, tol).unwrap();
            prop_assert!(f(root).abs() <= tol || (root - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }
}
