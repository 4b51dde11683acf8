//! Copula- and vine-based estimation of distribution algorithms.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: normal and Student-t distribution functions, root finding,
//!   rank statistics.
//! * [`margins`]: normal and normal-kernel univariate margins.
//! * [`bicop`]: the seven bivariate copula families with their h-functions,
//!   Kendall-tau fitting and Cramér–von Mises family selection.
//! * [`mvmodel`]: the independence (UMDA) and Gaussian copula (GCEDA) models.
//! * [`vine`]: C-vine and D-vine models (CVEDA, DVEDA).
//! * [`eda`]: the generational optimization loop.

pub mod bicop;
pub mod eda;
mod error;
pub mod margins;
pub mod mvmodel;
pub mod numerics;
pub mod seed;
pub mod vine;

pub use error::{Error, Result};
