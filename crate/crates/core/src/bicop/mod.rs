//! Bivariate copulas: product, normal, Student-t, Clayton, Gumbel and the
//! 90-degree rotations of the two Archimedean families.
//!
//! `h(x, v)` is the conditional distribution `dC(x, v) / dv`; `h_inv` inverts
//! it in `x`. The `*_given_first` variants condition on the first argument.

mod archimedean;
mod gof;
mod student;

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::numerics::{
    bivariate_normal_cdf, clamp_prob, std_normal_cdf, std_normal_quantile_unchecked, TauEstimate,
};
use rand::Rng as _;

use crate::{seed, Error, Result};
use archimedean::*;

pub use gof::{
    cvm_statistic, cvm_statistic_with, empirical_copula, fit, independence_test, select_copula, select_copula_at_level,
    GofResult, PseudoSample, INDEPENDENCE_LEVEL, PERMUTATIONS,
};
pub use student::{TCopula, NU_MAX, NU_MIN};

/// Copula families in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Product,
    Normal,
    StudentT,
    Clayton,
    RotClayton,
    Gumbel,
    RotGumbel,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Product,
        Family::Normal,
        Family::StudentT,
        Family::Clayton,
        Family::RotClayton,
        Family::Gumbel,
        Family::RotGumbel,
    ];

    /// Number of free parameters.
    pub fn parameter_count(self) -> usize {
        match self {
            Family::Product => 0,
            Family::StudentT => 2,
            _ => 1,
        }
    }

    /// Whether tau inversion is defined for this sign of tau.
    pub fn admits_tau(self, tau: f64) -> bool {
        match self {
            Family::Product | Family::Normal | Family::StudentT => true,
            Family::Clayton | Family::Gumbel => tau >= 0.0,
            Family::RotClayton | Family::RotGumbel => tau <= 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Product => "product",
            Family::Normal => "normal",
            Family::StudentT => "t",
            Family::Clayton => "clayton",
            Family::RotClayton => "rotclayton",
            Family::Gumbel => "gumbel",
            Family::RotGumbel => "rotgumbel",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const RHO_CLAMP: f64 = 0.999;
pub const THETA_MAX: f64 = 50.0;
const BOUNDARY_GAP: f64 = 1e-6;

/// A parametrised bivariate copula. Use the checked constructors; the
/// evaluation methods assume parameters in range.
#[derive(Debug, Clone, PartialEq)]
pub enum BivCopula {
    Product,
    Normal { rho: f64 },
    StudentT(TCopula),
    /// `theta > 0`
    Clayton { theta: f64 },
    /// `theta < 0`; stored with the sign of the rotation.
    RotClayton { theta: f64 },
    /// `theta >= 1`
    Gumbel { theta: f64 },
    /// `theta <= -1`
    RotGumbel { theta: f64 },
}

fn invalid(family: Family, detail: String) -> Error {
    Error::InvalidParameter { family, detail }
}

fn check_rho(family: Family, rho: f64) -> Result<()> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(invalid(family, format!("rho = {rho} must lie in (-1, 1)")));
    }
    Ok(())
}

impl BivCopula {
    pub fn normal(rho: f64) -> Result<Self> {
        check_rho(Family::Normal, rho)?;
        Ok(BivCopula::Normal { rho })
    }

    pub fn student_t(rho: f64, nu: f64) -> Result<Self> {
        check_rho(Family::StudentT, rho)?;
        if !(NU_MIN..=NU_MAX).contains(&nu) {
            return Err(invalid(Family::StudentT, format!("nu = {nu} must lie in [{NU_MIN}, {NU_MAX}]")));
        }
        Ok(BivCopula::StudentT(TCopula::new_unchecked(rho, nu)))
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid(Family::Clayton, format!("theta = {theta} must be positive")));
        }
        Ok(BivCopula::Clayton { theta })
    }

    pub fn rot_clayton(theta: f64) -> Result<Self> {
        if !(theta < 0.0 && theta.is_finite()) {
            return Err(invalid(Family::RotClayton, format!("theta = {theta} must be negative")));
        }
        Ok(BivCopula::RotClayton { theta })
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        if !(theta >= 1.0 && theta.is_finite()) {
            return Err(invalid(Family::Gumbel, format!("theta = {theta} must be at least 1")));
        }
        Ok(BivCopula::Gumbel { theta })
    }

    pub fn rot_gumbel(theta: f64) -> Result<Self> {
        if !(theta <= -1.0 && theta.is_finite()) {
            return Err(invalid(Family::RotGumbel, format!("theta = {theta} must be at most -1")));
        }
        Ok(BivCopula::RotGumbel { theta })
    }

    pub fn family(&self) -> Family {
        match self {
            BivCopula::Product => Family::Product,
            BivCopula::Normal { .. } => Family::Normal,
            BivCopula::StudentT(_) => Family::StudentT,
            BivCopula::Clayton { .. } => Family::Clayton,
            BivCopula::RotClayton { .. } => Family::RotClayton,
            BivCopula::Gumbel { .. } => Family::Gumbel,
            BivCopula::RotGumbel { .. } => Family::RotGumbel,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.family().parameter_count()
    }

    /// Distribution function on `[0, 1]^2`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let c = match self {
            BivCopula::Product => u * v,
            BivCopula::Normal { rho } => {
                bivariate_normal_cdf(std_normal_quantile_unchecked(u), std_normal_quantile_unchecked(v), *rho)
            }
            BivCopula::StudentT(t) => t.cdf(u, v),
            BivCopula::Clayton { theta } => clayton_cdf(u, v, *theta),
            BivCopula::RotClayton { theta } => u - clayton_cdf(u, 1.0 - v, -theta),
            BivCopula::Gumbel { theta } => gumbel_cdf(u, v, *theta),
            BivCopula::RotGumbel { theta } => u - gumbel_cdf(u, 1.0 - v, -theta),
        };
        c.clamp((u + v - 1.0).max(0.0), u.min(v))
    }

    /// Log density. Arguments are clamped into `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_prob(u), clamp_prob(v));
        match self {
            BivCopula::Product => 0.0,
            BivCopula::Normal { rho } => {
                let a = std_normal_quantile_unchecked(u);
                let b = std_normal_quantile_unchecked(v);
                let r2 = 1.0 - rho * rho;
                -(rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * r2) - 0.5 * r2.ln()
            }
            BivCopula::StudentT(t) => t.ln_pdf(u, v),
            BivCopula::Clayton { theta } => clayton_ln_pdf(u, v, *theta),
            BivCopula::RotClayton { theta } => clayton_ln_pdf(u, 1.0 - v, -theta),
            BivCopula::Gumbel { theta } => gumbel_ln_pdf(u, v, *theta),
            BivCopula::RotGumbel { theta } => gumbel_ln_pdf(u, 1.0 - v, -theta),
        }
    }

    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        self.ln_pdf(u, v).exp()
    }

    /// `dC(x, v) / dv`, the distribution of the first variable given the
    /// second. Inputs and output are clamped into `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn h(&self, x: f64, v: f64) -> f64 {
        let (x, v) = (clamp_prob(x), clamp_prob(v));
        let r = match self {
            BivCopula::Product => x,
            BivCopula::Normal { rho } => {
                let a = std_normal_quantile_unchecked(x);
                let b = std_normal_quantile_unchecked(v);
                std_normal_cdf((a - rho * b) / (1.0 - rho * rho).sqrt())
            }
            BivCopula::StudentT(t) => t.h(x, v),
            BivCopula::Clayton { theta } => clayton_h(x, v, *theta),
            BivCopula::RotClayton { theta } => clayton_h(x, 1.0 - v, -theta),
            BivCopula::Gumbel { theta } => gumbel_h(x, v, *theta),
            BivCopula::RotGumbel { theta } => gumbel_h(x, 1.0 - v, -theta),
        };
        clamp_prob(r)
    }

    /// Solves `h(x, v) = u` for `x`.
    pub fn h_inv(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_prob(u), clamp_prob(v));
        let r = match self {
            BivCopula::Product => u,
            BivCopula::Normal { rho } => {
                let a = std_normal_quantile_unchecked(u);
                let b = std_normal_quantile_unchecked(v);
                std_normal_cdf(a * (1.0 - rho * rho).sqrt() + rho * b)
            }
            BivCopula::StudentT(t) => t.h_inv(u, v),
            BivCopula::Clayton { theta } => clayton_h_inv(u, v, *theta),
            BivCopula::RotClayton { theta } => clayton_h_inv(u, 1.0 - v, -theta),
            BivCopula::Gumbel { theta } => gumbel_h_inv(u, v, *theta),
            BivCopula::RotGumbel { theta } => gumbel_h_inv(u, 1.0 - v, -theta),
        };
        clamp_prob(r)
    }

    /// `dC(u, v) / du`, the distribution of the second variable given the
    /// first.
    pub fn h_given_first(&self, u: f64, v: f64) -> f64 {
        match self {
            BivCopula::RotClayton { theta } => {
                clamp_prob(1.0 - clayton_h(clamp_prob(1.0 - v), clamp_prob(u), -theta))
            }
            BivCopula::RotGumbel { theta } => clamp_prob(1.0 - gumbel_h(clamp_prob(1.0 - v), clamp_prob(u), -theta)),
            _ => self.h(v, u),
        }
    }

    /// Solves `h_given_first(u, v) = w` for `v`.
    pub fn h_given_first_inv(&self, w: f64, u: f64) -> f64 {
        match self {
            BivCopula::RotClayton { theta } => {
                clamp_prob(1.0 - clayton_h_inv(clamp_prob(1.0 - w), clamp_prob(u), -theta))
            }
            BivCopula::RotGumbel { theta } => {
                clamp_prob(1.0 - gumbel_h_inv(clamp_prob(1.0 - w), clamp_prob(u), -theta))
            }
            _ => self.h_inv(w, u),
        }
    }

    /// Draws `n` pairs by conditional inversion: `v ~ U(0,1)`, then
    /// `u = h_inv(w, v)` with `w ~ U(0,1)`.
    pub fn simulate(&self, n: usize, rng_seed: u64) -> Vec<(f64, f64)> {
        let mut rng = seed::rng(rng_seed);
        (0..n)
            .map(|_| {
                let v = clamp_prob(rng.random::<f64>());
                let w = rng.random::<f64>();
                (self.h_inv(w, v), v)
            })
            .collect()
    }

    /// Kendall's tau implied by the parameters. Only the Archimedean
    /// families and the elliptical ones have closed forms; all are covered.
    pub fn kendall_tau(&self) -> f64 {
        match self {
            BivCopula::Product => 0.0,
            BivCopula::Normal { rho } => rho.asin() / FRAC_PI_2,
            BivCopula::StudentT(t) => t.rho().asin() / FRAC_PI_2,
            BivCopula::Clayton { theta } | BivCopula::RotClayton { theta } => theta / (theta.abs() + 2.0),
            BivCopula::Gumbel { theta } => 1.0 - 1.0 / theta,
            BivCopula::RotGumbel { theta } => -(1.0 + 1.0 / theta),
        }
    }
}

/// Fits `family` by inverting Kendall's tau, with parameters clamped away
/// from the family boundaries. The t copula receives `nu = NU_MAX`; use
/// [`fit`] to also estimate the degrees of freedom.
pub fn fit_by_tau(family: Family, tau: TauEstimate) -> Result<BivCopula> {
    let tau = tau.value();
    if !family.admits_tau(tau) {
        return Err(Error::IncompatibleTau { family, tau });
    }
    let rho = || (FRAC_PI_2 * tau).sin().clamp(-RHO_CLAMP, RHO_CLAMP);
    let clayton = |t: f64| (2.0 * t / (1.0 - t)).clamp(BOUNDARY_GAP, THETA_MAX);
    let gumbel = |t: f64| (1.0 / (1.0 - t)).clamp(1.0 + BOUNDARY_GAP, THETA_MAX);
    Ok(match family {
        Family::Product => BivCopula::Product,
        Family::Normal => BivCopula::Normal { rho: rho() },
        Family::StudentT => BivCopula::StudentT(TCopula::new_unchecked(rho(), NU_MAX)),
        Family::Clayton => BivCopula::Clayton { theta: clayton(tau) },
        Family::RotClayton => BivCopula::RotClayton { theta: -clayton(-tau) },
        Family::Gumbel => BivCopula::Gumbel { theta: gumbel(tau) },
        Family::RotGumbel => BivCopula::RotGumbel { theta: -gumbel(-tau) },
    })
}

/// Maximum-likelihood degrees of freedom of a t copula with fixed `rho`
/// over `[NU_MIN, NU_MAX]`.
pub fn fit_t_df(sample: &PseudoSample, rho: f64) -> Result<f64> {
    check_rho(Family::StudentT, rho)?;
    if sample.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    Ok(student::ProfileLik::new(sample.u(), sample.v(), rho).argmax())
}

/// Log-likelihood of a t copula at every `nu`, exposed for diagnostics.
pub fn t_profile_loglik(sample: &PseudoSample, rho: f64, nu: f64) -> Result<f64> {
    check_rho(Family::StudentT, rho)?;
    if !(NU_MIN..=NU_MAX).contains(&nu) {
        return Err(invalid(Family::StudentT, format!("nu = {nu} out of range")));
    }
    Ok(student::ProfileLik::new(sample.u(), sample.v(), rho).eval(nu))
}

#[cfg(test)]
mod tests;
