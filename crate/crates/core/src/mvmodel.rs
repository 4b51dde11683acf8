//! The independence model (UMDA) and the multivariate normal copula model
//! (GCEDA), with Kendall-tau correlation estimation and eigenvalue repair.
//!
//! Samples are `DMatrix<f64>` with one row per individual.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::bicop::RHO_CLAMP;
use crate::margins::{fit_columns, to_uniform, Margin, MarginKind};
use crate::numerics::{clamp_prob, kendall_tau, std_normal_cdf};
use crate::{seed, Error, Result};

/// Smallest eigenvalue kept by [`pd_correction`].
pub const PD_EPS: f64 = 1e-6;

/// A symmetric positive-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    pub fn identity(n: usize) -> Self {
        CorrelationMatrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Clips eigenvalues below `eps` and rescales to unit diagonal.
fn clip(m: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let lam = eig.eigenvalues.map(|l| l.max(eps));
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&lam) * v.transpose();
    let d: Vec<f64> = (0..out.nrows()).map(|i| out[(i, i)].sqrt()).collect();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            out[(i, j)] /= d[i] * d[j];
        }
    }
    // exact symmetry and unit diagonal
    let sym = (&out + out.transpose()) * 0.5;
    let mut out = sym;
    out.fill_diagonal(1.0);
    out
}

/// Returns `r` unchanged when its smallest eigenvalue is at least
/// [`PD_EPS`]; otherwise clips the spectrum at `PD_EPS` and rescales to
/// unit diagonal, repeating with a tenfold threshold until the result
/// clears `PD_EPS` and admits a Cholesky factor.
pub fn pd_correction(r: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let n = r.nrows();
    if n != r.ncols() {
        return Err(Error::LengthMismatch { left: n, right: r.ncols() });
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("correlation matrix"));
    }
    if min_eigenvalue(r) >= PD_EPS && Cholesky::new(r.clone()).is_some() {
        return Ok(CorrelationMatrix(r.clone()));
    }
    let mut eps = PD_EPS;
    while eps < 1.0 {
        let m = clip(r, eps);
        if min_eigenvalue(&m) >= PD_EPS && Cholesky::new(m.clone()).is_some() {
            return Ok(CorrelationMatrix(m));
        }
        eps *= 10.0;
    }
    Err(Error::NoConvergence { what: "pd_correction", iterations: 6 })
}

/// `R_ij = sin(pi/2 tau_ij)` over the columns of `data`, clamped to
/// `[-RHO_CLAMP, RHO_CLAMP]` and repaired by [`pd_correction`].
pub fn estimate_correlation(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let (rows, n) = data.shape();
    if rows < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: rows });
    }
    let cols: Vec<Vec<f64>> = data.column_iter().map(|c| c.iter().copied().collect()).collect();
    for (j, c) in cols.iter().enumerate() {
        if c.iter().all(|&x| x == c[0]) {
            return Err(Error::DegenerateSample { column: Some(j) });
        }
    }
    let mut r = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let tau = kendall_tau(&cols[i], &cols[j])?.value();
            let rho = (FRAC_PI_2 * tau).sin().clamp(-RHO_CLAMP, RHO_CLAMP);
            r[(i, j)] = rho;
            r[(j, i)] = rho;
        }
    }
    pd_correction(&r)
}

/// Pearson correlation of the columns of `data`, repaired by
/// [`pd_correction`]. Under normal margins the normal scores are affine in
/// the data, so this is their correlation and the Gaussian copula model is
/// the maximum-likelihood multivariate normal.
pub fn sample_correlation(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let (rows, n) = data.shape();
    if rows < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: rows });
    }
    let mean = data.row_mean();
    let centered = DMatrix::from_fn(rows, n, |i, j| data[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered;
    for j in 0..n {
        if !(cov[(j, j)] > 0.0) {
            return Err(Error::DegenerateSample { column: Some(j) });
        }
    }
    let r = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt()).clamp(-RHO_CLAMP, RHO_CLAMP)
        }
    });
    pd_correction(&r)
}

/// Product of independent margins.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceModel {
    pub margins: Vec<Margin>,
}

/// Normal copula with arbitrary margins.
#[derive(Debug, Clone)]
pub struct GaussianCopulaModel {
    pub margins: Vec<Margin>,
    pub corr: CorrelationMatrix,
    chol: DMatrix<f64>,
}

impl GaussianCopulaModel {
    pub fn new(margins: Vec<Margin>, corr: CorrelationMatrix) -> Result<Self> {
        if margins.len() != corr.dim() {
            return Err(Error::LengthMismatch { left: margins.len(), right: corr.dim() });
        }
        let chol = Cholesky::<f64, Dyn>::new(corr.0.clone())
            .ok_or(Error::NonFinite("cholesky factor"))?
            .l();
        Ok(GaussianCopulaModel { margins, corr, chol })
    }

    /// Lower-triangular `L` with `L L^T = R`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Independence,
    GaussianCopula,
}

#[derive(Debug, Clone)]
pub enum MvModel {
    Independence(IndependenceModel),
    Gaussian(GaussianCopulaModel),
}

/// Fits margins to every column, and for the copula model the correlation
/// matrix: the sample correlation under normal margins, Kendall-tau
/// inversion on the margin-transformed data under kernel margins.
pub fn fit(kind: ModelKind, data: &DMatrix<f64>, margin_kind: MarginKind) -> Result<MvModel> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    let margins = fit_columns(margin_kind, data)?;
    Ok(match kind {
        ModelKind::Independence => MvModel::Independence(IndependenceModel { margins }),
        ModelKind::GaussianCopula => {
            let corr = match margin_kind {
                MarginKind::Normal => sample_correlation(data)?,
                MarginKind::Kernel => estimate_correlation(&to_uniform(&margins, data))?,
            };
            MvModel::Gaussian(GaussianCopulaModel::new(margins, corr)?)
        }
    })
}

impl MvModel {
    pub fn dim(&self) -> usize {
        self.margins().len()
    }

    pub fn margins(&self) -> &[Margin] {
        match self {
            MvModel::Independence(m) => &m.margins,
            MvModel::Gaussian(m) => &m.margins,
        }
    }

    /// Draws `count` individuals.
    pub fn sample(&self, count: usize, rng_seed: u64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut rng = seed::rng(rng_seed);
        // draws in row-major order, margins applied column by column
        let mut out = DMatrix::zeros(count, n);
        match self {
            MvModel::Independence(_) => {
                for i in 0..count {
                    for j in 0..n {
                        out[(i, j)] = clamp_prob(rng.random::<f64>());
                    }
                }
                apply_margins(self.margins(), &mut out, |u| u)?;
            }
            MvModel::Gaussian(m) => {
                let mut e = vec![0.0; n];
                for i in 0..count {
                    for x in e.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    for j in 0..n {
                        out[(i, j)] = (0..=j).map(|k| m.chol[(j, k)] * e[k]).sum();
                    }
                }
                for (j, mg) in m.margins.iter().enumerate() {
                    if let Margin::Normal(_) = mg {
                        for z in out.column_mut(j).iter_mut() {
                            *z = mg.from_normal_score(*z)?;
                        }
                    } else {
                        let us: Vec<f64> = out.column(j).iter().map(|&z| clamp_prob(std_normal_cdf(z))).collect();
                        out.column_mut(j).copy_from_slice(&mg.quantiles(&us)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Replaces each column of copula-scale values by its margin quantiles.
pub(crate) fn apply_margins(margins: &[Margin], data: &mut DMatrix<f64>, map: impl Fn(f64) -> f64) -> Result<()> {
    for (j, mg) in margins.iter().enumerate() {
        let us: Vec<f64> = data.column(j).iter().map(|&v| map(v)).collect();
        data.column_mut(j).copy_from_slice(&mg.quantiles(&us)?);
    }
    Ok(())
}
