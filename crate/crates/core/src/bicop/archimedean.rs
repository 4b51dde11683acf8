//! Clayton and Gumbel kernels for the unrotated parameter ranges
//! (`theta > 0` and `theta >= 1`). Everything is evaluated on the log scale
//! so that `theta` up to 50 does not overflow near the corners.

use crate::numerics::{brent_root, Interval, PROB_EPS};

/// `ln(e^a + e^b - 1)` for `a, b >= 0`.
#[inline]
fn ln_sum_minus_one(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m < 700.0 {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    } else {
        m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
    }
}

pub(crate) fn clayton_cdf(u: f64, v: f64, theta: f64) -> f64 {
    let ls = ln_sum_minus_one(-theta * u.ln(), -theta * v.ln());
    (-ls / theta).exp()
}

/// `dC(x, v) / dv`.
pub(crate) fn clayton_h(x: f64, v: f64, theta: f64) -> f64 {
    let lv = v.ln();
    let ls = ln_sum_minus_one(-theta * x.ln(), -theta * lv);
    ((-theta - 1.0) * lv - (1.0 + 1.0 / theta) * ls).exp()
}

pub(crate) fn clayton_h_inv(u: f64, v: f64, theta: f64) -> f64 {
    let b = -theta * v.ln();
    let d = -theta / (theta + 1.0) * u.ln();
    let em = d.exp_m1();
    let lb = b + em.ln();
    let l = if lb < 700.0 { lb.exp().ln_1p() } else { lb + (-lb).exp().ln_1p() };
    (-l / theta).exp()
}

pub(crate) fn clayton_ln_pdf(u: f64, v: f64, theta: f64) -> f64 {
    let (lu, lv) = (u.ln(), v.ln());
    let ls = ln_sum_minus_one(-theta * lu, -theta * lv);
    theta.ln_1p() - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * ls
}

/// `ln(x^t + y^t)` from `ln x`, `ln y`.
#[inline]
fn ln_a(lx: f64, ly: f64, theta: f64) -> f64 {
    let (p, q) = (theta * lx, theta * ly);
    let m = p.max(q);
    m + ((p - m).exp() + (q - m).exp()).ln()
}

pub(crate) fn gumbel_cdf(u: f64, v: f64, theta: f64) -> f64 {
    let la = ln_a((-u.ln()).ln(), (-v.ln()).ln(), theta);
    (-(la / theta).exp()).exp()
}

pub(crate) fn gumbel_h(x: f64, v: f64, theta: f64) -> f64 {
    let lv = v.ln();
    let ly = (-lv).ln();
    let la = ln_a((-x.ln()).ln(), ly, theta);
    let w = (la / theta).exp();
    (-w - lv + (theta - 1.0) * ly + (1.0 / theta - 1.0) * la).exp()
}

/// Inverse of [`gumbel_h`] in its first argument by Brent's method on
/// `z = ln(-ln x)`, which resolves both ends of `[PROB_EPS, 1 - PROB_EPS]`.
/// Targets outside the image of that range return the nearer end.
pub(crate) fn gumbel_h_inv(u: f64, v: f64, theta: f64) -> f64 {
    let to_x = |z: f64| (-z.exp()).exp();
    // z decreases as x increases
    let (z_lo, z_hi) = ((-(1.0 - PROB_EPS).ln()).ln(), (-PROB_EPS.ln()).ln());
    let f = |z: f64| gumbel_h(to_x(z), v, theta) - u;
    if f(z_lo) <= 0.0 {
        return to_x(z_lo);
    }
    if f(z_hi) >= 0.0 {
        return to_x(z_hi);
    }
    let bracket = Interval::new(z_lo, z_hi).expect("static bracket");
    // relative to the smaller tail so tiny targets are still resolved
    let tol = 1e-10 * u.min(1.0 - u).min(1.0);
    to_x(brent_root(f, bracket, tol).unwrap_or(z_lo))
}

pub(crate) fn gumbel_ln_pdf(u: f64, v: f64, theta: f64) -> f64 {
    let (lu, lv) = (u.ln(), v.ln());
    let (lx, ly) = ((-lu).ln(), (-lv).ln());
    let la = ln_a(lx, ly, theta);
    let w = (la / theta).exp();
    -w - lu - lv + (theta - 1.0) * (lx + ly) + (1.0 / theta - 2.0) * la + (w + theta - 1.0).ln()
}
