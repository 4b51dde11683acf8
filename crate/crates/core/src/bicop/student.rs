//! Student-t copula: h-functions, density, the bivariate distribution
//! function and the profile likelihood in the degrees of freedom.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::numerics::{bivariate_normal_cdf, golden_section_max, ln_gamma, Interval, StudentT};

pub const NU_MIN: f64 = 1.0;
pub const NU_MAX: f64 = 30.0;

/// Student-t copula with correlation `rho` and `nu` degrees of freedom.
///
/// The distribution function is evaluated as a normal scale mixture,
/// `C = E[Phi_rho(x sqrt(g), y sqrt(g))]` with `g ~ chi2(nu) / nu`, using a
/// trapezoid rule in `ln g`. The nodes are built once per copula.
#[derive(Debug, Clone)]
pub struct TCopula {
    rho: f64,
    nu: f64,
    t: StudentT,
    t1: StudentT,
    /// `(scale, weight)` pairs of the mixture rule.
    nodes: Arc<[(f64, f64)]>,
}

impl PartialEq for TCopula {
    fn eq(&self, other: &Self) -> bool {
        self.rho == other.rho && self.nu == other.nu
    }
}

impl TCopula {
    /// Caller validates `|rho| < 1` and `nu` in `[NU_MIN, NU_MAX]`.
    pub(crate) fn new_unchecked(rho: f64, nu: f64) -> Self {
        TCopula {
            rho,
            nu,
            t: StudentT::new(nu).expect("validated nu"),
            t1: StudentT::new(nu + 1.0).expect("validated nu"),
            nodes: mixture_nodes(nu).into(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn cond_scale(&self, b: f64) -> f64 {
        ((self.nu + b * b) * (1.0 - self.rho * self.rho) / (self.nu + 1.0)).sqrt()
    }

    pub(crate) fn h(&self, x: f64, v: f64) -> f64 {
        let a = self.t.quantile_unchecked(x);
        let b = self.t.quantile_unchecked(v);
        self.t1.cdf((a - self.rho * b) / self.cond_scale(b))
    }

    pub(crate) fn h_inv(&self, u: f64, v: f64) -> f64 {
        let b = self.t.quantile_unchecked(v);
        let z = self.t1.quantile_unchecked(u);
        self.t.cdf(z * self.cond_scale(b) + self.rho * b)
    }

    pub(crate) fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        let x = self.t.quantile_unchecked(u);
        let y = self.t.quantile_unchecked(v);
        ln_pdf_at(x, y, self.rho, self.nu, ln_const(self.nu))
    }

    pub(crate) fn cdf(&self, u: f64, v: f64) -> f64 {
        self.cdf_at_scores(self.t.quantile_unchecked(u), self.t.quantile_unchecked(v), u.min(v))
    }

    /// Distribution function at t-scores `x`, `y`, clamped to `[0, bound]`.
    pub(crate) fn cdf_at_scores(&self, x: f64, y: f64, bound: f64) -> f64 {
        let s: f64 = self.nodes.iter().map(|&(s, w)| w * bivariate_normal_cdf(x * s, y * s, self.rho)).sum();
        s.clamp(0.0, bound)
    }

    /// t-scores of the levels `k / (n + 1)` for `k = 0..=n + 1`; the two
    /// ends are unused placeholders.
    pub(crate) fn rank_scores(&self, n: usize) -> Vec<f64> {
        let np1 = n as f64 + 1.0;
        let mut q = vec![0.0; n + 2];
        for k in 1..=(n + 1) / 2 {
            let x = self.t.quantile_unchecked(k as f64 / np1);
            q[k] = x;
            q[n + 1 - k] = -x;
        }
        q
    }
}

/// `ln G((nu+2)/2) + ln G(nu/2) - 2 ln G((nu+1)/2)`.
fn ln_const(nu: f64) -> f64 {
    ln_gamma(0.5 * nu + 1.0) + ln_gamma(0.5 * nu) - 2.0 * ln_gamma(0.5 * (nu + 1.0))
}

/// Copula log density at t-scores `x`, `y`.
#[inline]
fn ln_pdf_at(x: f64, y: f64, rho: f64, nu: f64, k: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * r2);
    k - 0.5 * r2.ln() - 0.5 * (nu + 2.0) * q.ln_1p() + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + 0.5 * x2 + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

/// Trapezoid nodes for `tau = ln g`, whose density is proportional to
/// `exp(a (tau - e^tau + 1))` with `a = nu / 2`. The grid is anchored at the
/// mode and cut where the relative weight drops below 1e-12.
fn mixture_nodes(nu: f64) -> Vec<(f64, f64)> {
    let a = 0.5 * nu;
    let step = (0.5 * trigamma(a).sqrt()).min(0.4);
    let cut = 1e-12f64.ln();
    let lw = |t: f64| a * (t - t.exp() + 1.0);
    let mut nodes = vec![(1.0, 1.0)];
    for dir in [-1.0, 1.0] {
        let mut k = 1.0;
        loop {
            let t = dir * k * step;
            let l = lw(t);
            if l < cut {
                break;
            }
            nodes.push(((0.5 * t).exp(), l.exp()));
            k += 1.0;
        }
    }
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

/// Profile log-likelihood of a t copula in `nu` with `rho` fixed.
///
/// Quantiles depend only on `min(p, 1 - p)`, so each distinct value is
/// inverted once per `nu`. Rank pseudo-samples have only `N / 2` of them.
pub(crate) struct ProfileLik {
    rho: f64,
    /// distinct lower-tail probabilities, ascending
    levels: Vec<f64>,
    /// per observation: (level index, sign) for u and v
    obs: Vec<(usize, f64, usize, f64)>,
}

impl ProfileLik {
    pub(crate) fn new(u: &[f64], v: &[f64], rho: f64) -> Self {
        let fold = |p: f64| if p <= 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
        let mut all: Vec<f64> = u.iter().chain(v).map(|&p| fold(p).0).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        all.dedup();
        let find = |p: f64| {
            let (q, s) = fold(p);
            (all.partition_point(|&l| l < q), s)
        };
        let obs = u
            .iter()
            .zip(v)
            .map(|(&a, &b)| {
                let (ia, sa) = find(a);
                let (ib, sb) = find(b);
                (ia, sa, ib, sb)
            })
            .collect();
        ProfileLik { rho, levels: all, obs }
    }

    pub(crate) fn eval(&self, nu: f64) -> f64 {
        let t = StudentT::new(nu).expect("nu in range");
        // p = 0.5 folds to level 0.5 with quantile 0
        let table: Vec<f64> = self.levels.iter().map(|&q| if q >= 0.5 { 0.0 } else { -t.quantile_unchecked(q) }).collect();
        let k = ln_const(nu);
        self.obs.iter().map(|&(ia, sa, ib, sb)| ln_pdf_at(sa * table[ia], sb * table[ib], self.rho, nu, k)).sum()
    }

    /// Golden-section maximizer in `ln nu` over `[NU_MIN, NU_MAX]`; the two
    /// endpoints are also compared so that a monotone likelihood returns the
    /// boundary.
    pub(crate) fn argmax(&self) -> f64 {
        let bracket = Interval::new(NU_MIN.ln(), NU_MAX.ln()).expect("static bracket");
        let inner = golden_section_max(|l| self.eval(l.exp()), bracket, 1e-3).exp().clamp(NU_MIN, NU_MAX);
        let mut best = (inner, self.eval(inner));
        for nu in [NU_MIN, NU_MAX] {
            let l = self.eval(nu);
            if l > best.1 {
                best = (nu, l);
            }
        }
        best.0
    }
}
