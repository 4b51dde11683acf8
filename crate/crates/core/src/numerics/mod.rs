//! Special functions, root finders and rank statistics shared by the other
//! modules. Everything here is pure.

mod rank;
mod roots;
mod special;

pub use rank::{dominance_counts, kendall_tau, ordinal_ranks, TauEstimate};
pub use roots::{brent_root, golden_section_max, Interval};
pub use special::{
    beta_reg, bivariate_normal_cdf, ln_beta, ln_gamma, std_normal_cdf, std_normal_pdf, std_normal_quantile,
    std_normal_quantile_unchecked, student_t_cdf, student_t_quantile, StudentT,
};

/// Clamp applied to every probability fed into an h-function, its inverse,
/// or a log density.
pub const PROB_EPS: f64 = 1e-12;

/// Clamps a probability into `[PROB_EPS, 1 - PROB_EPS]`.
#[inline]
pub fn clamp_prob(u: f64) -> f64 {
    u.clamp(PROB_EPS, 1.0 - PROB_EPS)
}
