//! Univariate margins: normal, and empirical smoothed with a normal kernel.

use nalgebra::DMatrix;

use crate::numerics::{clamp_prob, std_normal_cdf, std_normal_pdf, std_normal_quantile_unchecked};
use crate::{Error, Result};

/// Which margin family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginKind {
    Normal,
    Kernel,
}

/// Normal margin `N(mu, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMargin {
    mu: f64,
    sigma2: f64,
    sigma: f64,
}

impl NormalMargin {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() || !mu.is_finite() {
            return Err(Error::Domain { what: "normal margin variance", value: sigma2 });
        }
        Ok(NormalMargin { mu, sigma2, sigma: sigma2.sqrt() })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Kernel-smoothed empirical margin `F(t) = (1/N) sum Phi((t - y_j) / h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMargin {
    sample: Vec<f64>,
    bandwidth: f64,
}

/// Beyond this many bandwidths a kernel term is 0 or 1 to double precision.
const KERNEL_CUTOFF: f64 = 9.0;

impl KernelMargin {
    /// Builds a margin from a sample (sorted internally) and a bandwidth.
    pub fn new(mut sample: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: sample.len() });
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::Domain { what: "kernel bandwidth", value: bandwidth });
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("kernel margin sample"));
        }
        sample.sort_by(f64::total_cmp);
        Ok(KernelMargin { sample, bandwidth })
    }

    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Indices of the sample points within the kernel cutoff of `t`.
    fn window(&self, t: f64) -> (usize, usize) {
        let reach = KERNEL_CUTOFF * self.bandwidth;
        let lo = self.sample.partition_point(|&y| y < t - reach);
        let hi = self.sample.partition_point(|&y| y <= t + reach);
        (lo, hi)
    }

    /// CDF and density at `t` in one pass over the window.
    fn cdf_pdf(&self, t: f64) -> (f64, f64) {
        let (lo, hi) = self.window(t);
        let (mut c, mut d) = (lo as f64, 0.0);
        for &y in &self.sample[lo..hi] {
            let z = (t - y) / self.bandwidth;
            c += std_normal_cdf(z);
            d += std_normal_pdf(z);
        }
        let n = self.sample.len() as f64;
        (c / n, d / (n * self.bandwidth))
    }

    fn cdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.window(t);
        // points left of the window contribute exactly 1, right of it 0
        let inside: f64 = self.sample[lo..hi].iter().map(|&y| std_normal_cdf((t - y) / self.bandwidth)).sum();
        (lo as f64 + inside) / self.sample.len() as f64
    }

    fn pdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.window(t);
        let s: f64 = self.sample[lo..hi].iter().map(|&y| std_normal_pdf((t - y) / self.bandwidth)).sum();
        s / (self.sample.len() as f64 * self.bandwidth)
    }

    /// Empirical quantile of the raw sample (linear interpolation between
    /// order statistics).
    fn raw_quantile(&self, u: f64) -> f64 {
        quantile_sorted(&self.sample, u)
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        let h = self.bandwidth;
        let lo_bound = self.sample[0] - 10.0 * h;
        let hi_bound = self.sample[self.sample.len() - 1] + 10.0 * h;
        let mut x = self.raw_quantile(u);
        let mut lo = lo_bound;
        let mut hi = hi_bound;
        for _ in 0..100 {
            let f = self.cdf(x) - u;
            if f.abs() <= 1e-13 {
                return Ok(x);
            }
            if f < 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let d = self.pdf(x);
            let next = x - f / d;
            if !next.is_finite() || next < lo_bound || next > hi_bound || d <= 0.0 {
                break;
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return Ok(next);
            }
            x = next;
        }
        // Bisection on the surviving bracket.
        if self.cdf(lo) > u || self.cdf(hi) < u {
            lo = lo_bound;
            hi = hi_bound;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            let f = self.cdf(mid) - u;
            if f.abs() <= 1e-13 {
                return Ok(mid);
            }
            if f < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        if (self.cdf(mid) - u).abs() <= 1e-9 {
            Ok(mid)
        } else {
            Err(Error::NoConvergence { what: "kernel margin quantile", iterations: 300 })
        }
    }
}

/// Grid spacing of the batch inversion table, in bandwidths. With
/// `|F''''| <= max|phi'''| / h^4 < 1.39 / h^4`, the cubic Hermite
/// interpolant of the CDF is within `1.39 * 0.05^4 / 384 < 2.3e-8` of it.
const TABLE_STEP: f64 = 0.05;
/// The table pays off once it is cheaper than this many Newton
/// evaluations per probability.
const NEWTON_EVALS: f64 = 4.0;

impl KernelMargin {
    /// Quantiles of many probabilities at once, for sampling: inverts the
    /// cubic Hermite interpolant of a CDF table on a grid of spacing
    /// `TABLE_STEP * h` (CDF error below 2.3e-8). Falls back to `quantile`
    /// when the table would cost more than the batch.
    fn quantiles(&self, us: &[f64]) -> Result<Vec<f64>> {
        let h = self.bandwidth;
        let lo_bound = self.sample[0] - 10.0 * h;
        let hi_bound = self.sample[self.sample.len() - 1] + 10.0 * h;
        let cells = ((hi_bound - lo_bound) / (TABLE_STEP * h)).ceil();
        if !(cells < NEWTON_EVALS * us.len() as f64) {
            return us.iter().map(|&u| self.quantile(u)).collect();
        }
        let cells = cells as usize;
        let step = (hi_bound - lo_bound) / cells as f64;
        let grid: Vec<(f64, f64, f64)> = (0..=cells)
            .map(|k| {
                let x = if k == cells { hi_bound } else { lo_bound + k as f64 * step };
                let (c, d) = self.cdf_pdf(x);
                (x, c, d)
            })
            .collect();
        us.iter()
            .map(|&u| {
                let k = grid.partition_point(|g| g.1 <= u);
                if k == 0 || k > cells {
                    return self.quantile(u);
                }
                let ((x0, c0, d0), (x1, c1, d1)) = (grid[k - 1], grid[k]);
                let w = x1 - x0;
                let (m0, m1) = (d0 * w, d1 * w);
                let hermite = |t: f64| {
                    let (t2, t3) = (t * t, t * t * t);
                    let value = (2.0 * t3 - 3.0 * t2 + 1.0) * c0
                        + (t3 - 2.0 * t2 + t) * m0
                        + (-2.0 * t3 + 3.0 * t2) * c1
                        + (t3 - t2) * m1;
                    let slope = (6.0 * t2 - 6.0 * t) * (c0 - c1)
                        + (3.0 * t2 - 4.0 * t + 1.0) * m0
                        + (3.0 * t2 - 2.0 * t) * m1;
                    (value - u, slope)
                };
                // safeguarded Newton on [0, 1], where the cubic changes sign
                let (mut a, mut b) = (0.0, 1.0);
                let mut t = (u - c0) / (c1 - c0);
                for _ in 0..60 {
                    let (f, slope) = hermite(t);
                    if f == 0.0 {
                        break;
                    }
                    if f < 0.0 {
                        a = t;
                    } else {
                        b = t;
                    }
                    let next = t - f / slope;
                    let next = if slope > 0.0 && next > a && next < b { next } else { 0.5 * (a + b) };
                    if (next - t).abs() <= 1e-15 {
                        t = next;
                        break;
                    }
                    t = next;
                }
                Ok(x0 + t * w)
            })
            .collect()
    }
}

/// A fitted univariate margin.
#[derive(Debug, Clone, PartialEq)]
pub enum Margin {
    Normal(NormalMargin),
    Kernel(KernelMargin),
}

impl Margin {
    /// Fits a margin of the given kind.
    pub fn fit(kind: MarginKind, sample: &[f64]) -> Result<Self> {
        match kind {
            MarginKind::Normal => fit_normal(sample).map(Margin::Normal),
            MarginKind::Kernel => fit_kernel(sample).map(Margin::Kernel),
        }
    }

    pub fn kind(&self) -> MarginKind {
        match self {
            Margin::Normal(_) => MarginKind::Normal,
            Margin::Kernel(_) => MarginKind::Kernel,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Margin::Normal(m) => std_normal_cdf((x - m.mu) / m.sigma),
            Margin::Kernel(k) => k.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Margin::Normal(m) => std_normal_pdf((x - m.mu) / m.sigma) / m.sigma,
            Margin::Kernel(k) => k.pdf(x),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Margin::Normal(m) => {
                let z = (x - m.mu) / m.sigma;
                -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - m.sigma.ln()
            }
            Margin::Kernel(k) => k.pdf(x).ln(),
        }
    }

    /// Inverse distribution function; `u` must lie in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain { what: "probability", value: u });
        }
        match self {
            Margin::Normal(m) => Ok(m.mu + m.sigma * std_normal_quantile_unchecked(u)),
            Margin::Kernel(k) => k.quantile(u),
        }
    }

    /// Quantiles of a batch of probabilities, each in (0, 1). Kernel
    /// margins share one interpolation table across the batch.
    pub fn quantiles(&self, us: &[f64]) -> Result<Vec<f64>> {
        if let Some(&u) = us.iter().find(|&&u| !(u > 0.0 && u < 1.0)) {
            return Err(Error::Domain { what: "probability", value: u });
        }
        match self {
            Margin::Normal(_) => us.iter().map(|&u| self.quantile(u)).collect(),
            Margin::Kernel(k) => k.quantiles(us),
        }
    }

    /// Maps a standard normal score `z` to the margin scale, i.e.
    /// `quantile(Phi(z))`. Exact for normal margins without the round trip
    /// through a probability.
    pub fn from_normal_score(&self, z: f64) -> Result<f64> {
        match self {
            Margin::Normal(m) => Ok(m.mu + m.sigma * z),
            Margin::Kernel(k) => k.quantile(crate::numerics::clamp_prob(std_normal_cdf(z))),
        }
    }
}

fn mean_var(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("margin sample"));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateSample { column: None });
    }
    Ok((mean, var))
}

/// Sample mean and variance (divisor `N - 1`).
pub fn fit_normal(sample: &[f64]) -> Result<NormalMargin> {
    let (mu, sigma2) = mean_var(sample)?;
    NormalMargin::new(mu, sigma2)
}

/// Kernel margin with Silverman's robust rule of thumb,
/// `h = 0.9 min(sd, IQR / 1.34) N^(-1/5)`. When the IQR is zero the standard
/// deviation alone is used.
pub fn fit_kernel(sample: &[f64]) -> Result<KernelMargin> {
    let (_, var) = mean_var(sample)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let sd = var.sqrt();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (sample.len() as f64).powf(-0.2);
    if !(h > 0.0) {
        return Err(Error::DegenerateSample { column: None });
    }
    KernelMargin::new(sorted, h)
}

/// Linear interpolation between order statistics (`(N-1) p` indexing).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[sorted.len() - 1]
    }
}

/// Fits one margin per column of `data` (rows are observations). A
/// zero-variance column is reported with its index.
pub fn fit_columns(kind: MarginKind, data: &DMatrix<f64>) -> Result<Vec<Margin>> {
    data.column_iter()
        .enumerate()
        .map(|(j, col)| {
            let col: Vec<f64> = col.iter().copied().collect();
            Margin::fit(kind, &col).map_err(|e| match e {
                Error::DegenerateSample { .. } => Error::DegenerateSample { column: Some(j) },
                e => e,
            })
        })
        .collect()
}

/// Applies each margin's distribution function to its column, clamped into
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn to_uniform(margins: &[Margin], data: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| clamp_prob(margins[j].cdf(data[(i, j)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normal_like(n: usize) -> Vec<f64> {
        (1..=n).map(|i| std_normal_quantile_unchecked(i as f64 / (n as f64 + 1.0))).collect()
    }

    #[test]
    fn fit_normal_examples() {
        let m = fit_normal(&[0.0, 0.0, 0.0, 2.0, 2.0, 2.0]).unwrap();
        assert!((m.mu() - 1.0).abs() < 1e-15);
        assert!((m.sigma2() - 1.2).abs() < 1e-15);
        assert!(matches!(fit_normal(&[3.0; 5]), Err(Error::DegenerateSample { .. })));
        let x = [0.3, -1.2, 2.2, 0.9, 4.1];
        let m = fit_normal(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| -2.5 * v + 7.0).collect();
        let my = fit_normal(&y).unwrap();
        assert!((my.mu() - (-2.5 * m.mu() + 7.0)).abs() < 1e-12);
        assert!((my.sigma2() - 6.25 * m.sigma2()).abs() < 1e-12);
    }

    #[test]
    fn fit_kernel_bandwidth() {
        let s = normal_like(100);
        let k = fit_kernel(&s).unwrap();
        // oracle: evaluate the rule directly on this fixed sample
        let mean = s.iter().sum::<f64>() / 100.0;
        let sd = (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        let q = |p: f64| {
            let pos = p * 99.0;
            let i = pos.floor() as usize;
            s[i] + (pos - i as f64) * (s[i + 1] - s[i])
        };
        let iqr = q(0.75) - q(0.25);
        let want = 0.9 * sd.min(iqr / 1.34) * 100f64.powf(-0.2);
        assert!((k.bandwidth() - want).abs() < 1e-14);
        // sd and IQR/1.34 of this grid sit slightly below 1
        assert!((k.bandwidth() - 0.3585).abs() < 0.015, "h={}", k.bandwidth());

        let scaled: Vec<f64> = s.iter().map(|x| 3.5 * x).collect();
        let ks = fit_kernel(&scaled).unwrap();
        assert!((ks.bandwidth() - 3.5 * k.bandwidth()).abs() < 1e-12);
        assert!(matches!(fit_kernel(&[1.0; 4]), Err(Error::DegenerateSample { .. })));
    }

    #[test]
    fn cdf_examples() {
        let sym = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let k = Margin::Kernel(fit_kernel(&sym).unwrap());
        assert!((k.cdf(0.0) - 0.5).abs() < 1e-14);
        let n = Margin::Normal(NormalMargin::new(0.0, 1.0).unwrap());
        assert_eq!(n.cdf(0.0), 0.5);
    }

    #[test]
    fn kernel_cdf_matches_naive_sum() {
        let s: Vec<f64> = (0..57).map(|i| ((i * 37) % 57) as f64 * 0.13 - 2.0 + (i as f64).sin()).collect();
        let km = fit_kernel(&s).unwrap();
        let h = km.bandwidth();
        let m = Margin::Kernel(km);
        for i in 0..200 {
            let t = -6.0 + i as f64 * 0.07;
            let naive = s.iter().map(|&y| std_normal_cdf((t - y) / h)).sum::<f64>() / s.len() as f64;
            assert!((m.cdf(t) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_examples() {
        let n = Margin::Normal(NormalMargin::new(3.0, 4.0).unwrap());
        assert_eq!(n.quantile(0.5).unwrap(), 3.0);
        let k = Margin::Kernel(KernelMargin::new(vec![-1.0, 1.0], 0.8).unwrap());
        assert!(k.quantile(0.5).unwrap().abs() < 1e-9);
        assert!(k.quantile(0.0).is_err());
        assert!(k.quantile(1.0).is_err());
    }

    #[test]
    fn kernel_round_trip_across_sample_range() {
        let s = [0.1, 0.15, 0.2, 3.0, 3.1, 7.5, 7.6, 7.61, 20.0];
        let m = Margin::Kernel(fit_kernel(&s).unwrap());
        for i in 0..=100 {
            let x = 0.1 + i as f64 * 0.199;
            let back = m.quantile(m.cdf(x)).unwrap();
            assert!((back - x).abs() < 1e-7, "x={x} back={back}");
        }
    }

    #[test]
    fn kernel_tails() {
        let s = normal_like(30);
        let k = fit_kernel(&s).unwrap();
        let h = k.bandwidth();
        let m = Margin::Kernel(k);
        assert!(m.cdf(s[0] - 10.0 * h) < 1e-15);
        assert!(m.cdf(s[29] + 10.0 * h) > 1.0 - 1e-15);
    }

    #[test]
    fn batch_quantiles_invert_the_cdf() {
        let m = Margin::Kernel(fit_kernel(&normal_like(300)).unwrap());
        let us: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).chain([1e-12, 1e-7, 1.0 - 1e-7]).collect();
        let xs = m.quantiles(&us).unwrap();
        for (&u, &x) in us.iter().zip(&xs) {
            assert!((m.cdf(x) - u).abs() < 2.3e-8, "u={u}: {}", m.cdf(x));
        }
        assert!(xs.windows(2).take(1999).all(|w| w[0] <= w[1]));
        // small batches use the exact inversion
        let few = [0.1, 0.5, 0.9];
        let exact: Vec<f64> = few.iter().map(|&u| m.quantile(u).unwrap()).collect();
        assert_eq!(m.quantiles(&few).unwrap(), exact);
        assert!(m.quantiles(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn kernel_quantile_in_far_tails() {
        let m = Margin::Kernel(fit_kernel(&normal_like(40)).unwrap());
        for u in [1e-12, 1e-9, 1e-4, 1.0 - 1e-4, 1.0 - 1e-9] {
            let x = m.quantile(u).unwrap();
            assert!((m.cdf(x) - u).abs() < 1e-9, "u={u}");
        }
    }

    proptest! {
        #[test]
        fn cdf_monotone_and_round_trip(s in proptest::collection::vec(-50.0f64..50.0, 3..40), kernel in any::<bool>()) {
            let kind = if kernel { MarginKind::Kernel } else { MarginKind::Normal };
            let m = match Margin::fit(kind, &s) { Ok(m) => m, Err(_) => return Ok(()) };
            let lo = s.iter().cloned().fold(f64::INFINITY, f64::min) - 5.0;
            let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 5.0;
            let mut prev = 0.0;
            for i in 0..1000 {
                let x = lo + (hi - lo) * i as f64 / 999.0;
                let c = m.cdf(x);
                prop_assert!(c >= prev);
                prev = c;
            }
            for i in 0..20 {
                let x = lo + 5.0 + (hi - lo - 10.0) * i as f64 / 19.0;
                let u = m.cdf(x);
                // the round trip is only well conditioned where the density is not negligible
                if u > 1e-10 && u < 1.0 - 1e-10 && m.pdf(x) > 1e-4 {
                    let back = m.quantile(u).unwrap();
                    prop_assert!((back - x).abs() < 1e-7 * (1.0 + x.abs()), "x={} back={}", x, back);
                }
            }
        }
    }
}
