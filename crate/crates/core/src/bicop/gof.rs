//! Empirical copula, Cramér–von Mises goodness of fit, the permutation
//! independence test and family selection.

use rand::seq::SliceRandom;

use super::{fit_by_tau, fit_t_df, BivCopula, Family, TCopula};
use crate::numerics::{dominance_counts, kendall_tau, ordinal_ranks, TauEstimate};
use crate::{seed, Error, Result};

/// Significance level of the independence test.
pub const INDEPENDENCE_LEVEL: f64 = 0.1;
/// Permutations drawn by the independence test.
pub const PERMUTATIONS: usize = 99;

/// Bivariate observations with both coordinates in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl PseudoSample {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch { left: u.len(), right: v.len() });
        }
        for &p in u.iter().chain(&v) {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Domain { what: "pseudo-observation", value: p });
            }
        }
        Ok(PseudoSample { u, v })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    /// Rescaled ordinal ranks `rank / (N + 1)` of arbitrary real data.
    pub fn from_ranks(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
        }
        let np1 = xs.len() as f64 + 1.0;
        let rescale = |r: Vec<usize>| r.into_iter().map(|k| k as f64 / np1).collect();
        Ok(PseudoSample { u: rescale(ordinal_ranks(xs)), v: rescale(ordinal_ranks(ys)) })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u.iter().copied().zip(self.v.iter().copied())
    }

    pub fn kendall_tau(&self) -> Result<TauEstimate> {
        kendall_tau(&self.u, &self.v)
    }
}

/// A fitted copula together with its Cramér–von Mises distance.
#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub copula: BivCopula,
}

/// `(1/N) #{i : U_i <= u, V_i <= v}` with `U_i`, `V_i` the rescaled ranks.
pub fn empirical_copula(sample: &PseudoSample, u: f64, v: f64) -> f64 {
    let n = sample.len();
    if n == 0 {
        return 0.0;
    }
    let np1 = n as f64 + 1.0;
    let ru = ordinal_ranks(&sample.u);
    let rv = ordinal_ranks(&sample.v);
    let hits = ru.iter().zip(&rv).filter(|&(&a, &b)| a as f64 / np1 <= u && b as f64 / np1 <= v).count();
    hits as f64 / n as f64
}

/// Rank points and empirical copula values at the sample points.
fn rank_points(sample: &PseudoSample) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = sample.len() as f64;
    let ru = ordinal_ranks(&sample.u);
    let rv = ordinal_ranks(&sample.v);
    let ce = dominance_counts(&ru, &rv).into_iter().map(|c| c as f64 / n).collect();
    (ru, rv, ce)
}

/// `S_N = sum_i (C_E(U_i, V_i) - C(U_i, V_i))^2` at the rescaled rank points
/// for an arbitrary distribution function `c`.
pub fn cvm_statistic_with<F: Fn(f64, f64) -> f64>(sample: &PseudoSample, c: F) -> f64 {
    let np1 = sample.len() as f64 + 1.0;
    cvm_at_ranks(sample, |a, b| c(a as f64 / np1, b as f64 / np1))
}

/// `S_N` with the model distribution function given on rank pairs.
fn cvm_at_ranks<F: Fn(usize, usize) -> f64>(sample: &PseudoSample, c: F) -> f64 {
    let (ru, rv, ce) = rank_points(sample);
    ru.iter()
        .zip(&rv)
        .zip(&ce)
        .map(|((&a, &b), &e)| {
            let d = e - c(a, b);
            d * d
        })
        .sum()
}

pub fn cvm_statistic(sample: &PseudoSample, c: &BivCopula) -> GofResult {
    let statistic = match c {
        BivCopula::StudentT(t) => {
            let n = sample.len();
            let q = t.rank_scores(n);
            let np1 = n as f64 + 1.0;
            cvm_at_ranks(sample, |a, b| t.cdf_at_scores(q[a], q[b], a.min(b) as f64 / np1))
        }
        _ => cvm_statistic_with(sample, |u, v| c.cdf(u, v)),
    };
    GofResult { statistic, copula: c.clone() }
}

/// Distance to the product copula for ranks `ru` and `rv`.
fn product_distance(ru: &[usize], rv: &[usize]) -> f64 {
    let n = ru.len() as f64;
    let scale = 1.0 / (n + 1.0);
    dominance_counts(ru, rv)
        .iter()
        .zip(ru.iter().zip(rv))
        .map(|(&c, (&a, &b))| {
            let d = c as f64 / n - a as f64 * b as f64 * scale * scale;
            d * d
        })
        .sum()
}

/// Counts permutations whose statistic reaches the observed one, stopping
/// once `stop_at` is reached.
fn exceedances(sample: &PseudoSample, rng_seed: u64, stop_at: usize) -> Result<usize> {
    let n = sample.len();
    if n < 10 {
        return Err(Error::TooFewObservations { needed: 10, got: n });
    }
    let ru = ordinal_ranks(&sample.u);
    let mut rv = ordinal_ranks(&sample.v);
    let observed = product_distance(&ru, &rv);
    let mut rng = seed::rng(rng_seed);
    let mut count = 0;
    for _ in 0..PERMUTATIONS {
        rv.shuffle(&mut rng);
        if product_distance(&ru, &rv) >= observed {
            count += 1;
            if count >= stop_at {
                break;
            }
        }
    }
    Ok(count)
}

/// Permutation p-value of the Cramér–von Mises distance between the
/// empirical copula and the product copula:
/// `(1 + #{T_perm >= T_obs}) / (PERMUTATIONS + 1)`.
pub fn independence_test(sample: &PseudoSample, rng_seed: u64) -> Result<f64> {
    let k = exceedances(sample, rng_seed, usize::MAX)?;
    Ok((1 + k) as f64 / (PERMUTATIONS + 1) as f64)
}

/// Fits `family` by tau inversion; the t copula additionally gets its
/// degrees of freedom by maximum likelihood.
pub fn fit(family: Family, sample: &PseudoSample) -> Result<BivCopula> {
    let tau = sample.kendall_tau()?;
    let c = fit_by_tau(family, tau)?;
    if let BivCopula::StudentT(t) = &c {
        let nu = fit_t_df(sample, t.rho())?;
        return Ok(BivCopula::StudentT(TCopula::new_unchecked(t.rho(), nu)));
    }
    Ok(c)
}

/// [`select_copula_at_level`] at [`INDEPENDENCE_LEVEL`].
pub fn select_copula(sample: &PseudoSample, candidates: &[Family], rng_seed: u64) -> Result<BivCopula> {
    select_copula_at_level(sample, candidates, INDEPENDENCE_LEVEL, rng_seed)
}

/// Returns the product copula unless independence is rejected at `level`;
/// otherwise the compatible candidate with the smallest `S_N`, ties going to
/// the earlier family. Falls back to the product copula when no candidate
/// is compatible with the sign of tau.
pub fn select_copula_at_level(
    sample: &PseudoSample,
    candidates: &[Family],
    level: f64,
    rng_seed: u64,
) -> Result<BivCopula> {
    // p >= level  <=>  1 + k >= level * (B + 1)
    let needed = ((level * (PERMUTATIONS + 1) as f64 - 1e-9).ceil().max(0.0) as usize).saturating_sub(1);
    if needed == 0 || exceedances(sample, rng_seed, needed)? >= needed {
        return Ok(BivCopula::Product);
    }
    let tau = sample.kendall_tau()?;
    let mut families: Vec<Family> = candidates.to_vec();
    families.sort();
    families.dedup();
    let mut best: Option<GofResult> = None;
    for fam in families {
        if fam == Family::Product || !fam.admits_tau(tau.value()) {
            continue;
        }
        if matches!(fam, Family::Clayton | Family::Gumbel | Family::RotClayton | Family::RotGumbel) && tau.value() == 0.0
        {
            continue;
        }
        let c = fit(fam, sample)?;
        let g = cvm_statistic(sample, &c);
        if best.as_ref().is_none_or(|b| g.statistic < b.statistic) {
            best = Some(g);
        }
    }
    Ok(best.map_or(BivCopula::Product, |g| g.copula))
}
