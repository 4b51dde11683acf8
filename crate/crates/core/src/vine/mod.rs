//! Canonical (C) and drawable (D) vines.
//!
//! Variables are relabelled by the structure order, so tree `j` (0-based)
//! of a C-vine has root `order[j]` and edges to `order[j+1..]`, and tree `j`
//! of a D-vine pairs `order[i]` with `order[i+j+1]`. Pair copulas take
//! arguments `(other, root)` in C-vines and `(left, right)` in D-vines.

mod structure;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::bicop::{select_copula_at_level, BivCopula, Family, PseudoSample, INDEPENDENCE_LEVEL};
use crate::margins::{fit_columns, to_uniform, Margin, MarginKind};
use crate::numerics::clamp_prob;
use crate::{seed, Error, Result};

pub use structure::{cheapest_insertion_path, random_order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VineKind {
    C,
    D,
}

/// Variable order defining the vine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VineStructure {
    pub kind: VineKind,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Fixed(usize),
    Aic,
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureMode {
    Greedy,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub truncation: Truncation,
    pub structure: StructureMode,
    pub families: Vec<Family>,
    pub independence_level: f64,
    pub margins: MarginKind,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            truncation: Truncation::Aic,
            structure: StructureMode::Greedy,
            families: Family::ALL.to_vec(),
            independence_level: INDEPENDENCE_LEVEL,
            margins: MarginKind::Normal,
        }
    }
}

/// A fitted vine. `trees[j]` holds the `n - 1 - j` pair copulas of tree
/// `j + 1`; trees past `truncation_level` hold only product copulas.
#[derive(Debug, Clone)]
pub struct VineModel {
    pub structure: VineStructure,
    pub trees: Vec<Vec<BivCopula>>,
    pub truncation_level: usize,
    pub margins: Vec<Margin>,
}

/// Chooses the order from the margin-transformed data `u` (rows are
/// observations). The C-vine order lists the first-tree root followed by
/// the remaining variables by decreasing tau weight sum; `fit` re-selects
/// later roots on the conditional observations.
pub fn select_structure(kind: VineKind, u: &DMatrix<f64>, mode: StructureMode) -> Result<VineStructure> {
    let n = u.ncols();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("a vine needs at least 2 variables, got {n}")));
    }
    if let StructureMode::Random(s) = mode {
        return Ok(VineStructure { kind, order: random_order(n, s) });
    }
    let cols = columns(u);
    let w = structure::abs_tau_matrix(&cols)?;
    let order = match kind {
        VineKind::D => cheapest_insertion_path(&w),
        VineKind::C => {
            let mut rest: Vec<usize> = (0..n).collect();
            let mut order = Vec::with_capacity(n);
            while !rest.is_empty() {
                let r = structure::heaviest_node(&w, &rest);
                rest.retain(|&k| k != r);
                order.push(r);
            }
            order
        }
    };
    Ok(VineStructure { kind, order })
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

/// Conditional observations entering one tree, in edge order.
#[derive(Debug, Clone)]
enum Level {
    /// `cols[0]` is the root, the rest are the other variables.
    C { cols: Vec<Vec<f64>> },
    /// `right[i]` is the conditional distribution of `order[i]` given the
    /// variables to its right within the window, `left[i]` that of
    /// `order[i + j]` given those to its left.
    D { right: Vec<Vec<f64>>, left: Vec<Vec<f64>> },
}

impl Level {
    fn edges(&self) -> usize {
        match self {
            Level::C { cols } => cols.len() - 1,
            Level::D { right, .. } => right.len() - 1,
        }
    }

    /// Arguments of edge `i`.
    fn pair(&self, i: usize) -> (&[f64], &[f64]) {
        match self {
            Level::C { cols } => (&cols[i + 1], &cols[0]),
            Level::D { right, left } => (&right[i], &left[i + 1]),
        }
    }

    /// Observations for the next tree.
    fn next(&self, copulas: &[BivCopula]) -> Level {
        let map2 = |a: &[f64], b: &[f64], f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
        };
        match self {
            Level::C { cols } => Level::C {
                cols: (0..copulas.len())
                    .map(|i| map2(&cols[i + 1], &cols[0], &|x, y| copulas[i].h(x, y)))
                    .collect(),
            },
            Level::D { right, left } => {
                let m = copulas.len();
                Level::D {
                    right: (0..m).map(|i| map2(&right[i], &left[i + 1], &|x, y| copulas[i].h(x, y))).collect(),
                    left: (0..m)
                        .map(|i| map2(&right[i], &left[i + 1], &|x, y| copulas[i].h_given_first(x, y)))
                        .collect(),
                }
            }
        }
    }
}

fn edge_loglik(c: &BivCopula, a: &[f64], b: &[f64]) -> f64 {
    match c {
        BivCopula::Product => 0.0,
        c => a.iter().zip(b).map(|(&x, &y)| c.ln_pdf(x, y)).sum(),
    }
}

fn criterion(mode: Criterion, loglik: f64, params: usize, n_obs: usize) -> f64 {
    match mode {
        Criterion::Aic => -2.0 * loglik + 2.0 * params as f64,
        Criterion::Bic => -2.0 * loglik + params as f64 * (n_obs as f64).ln(),
    }
}

/// Margin-transformed columns in structure order.
fn first_level(kind: VineKind, order: &[usize], u: &DMatrix<f64>) -> Level {
    let cols: Vec<Vec<f64>> = order.iter().map(|&k| u.column(k).iter().copied().collect()).collect();
    match kind {
        VineKind::C => Level::C { cols },
        VineKind::D => Level::D { right: cols.clone(), left: cols },
    }
}

/// Fits margins and pair copulas tree by tree.
///
/// Each edge is fitted on the ranks of its conditional observations; its
/// log-likelihood, and the transformed observations passed on, use the
/// observations themselves. With fewer than 10 rows independence cannot be
/// rejected and every pair copula is the product copula.
pub fn fit(data: &DMatrix<f64>, kind: VineKind, config: &FitConfig, rng_seed: u64) -> Result<VineModel> {
    let (rows, n) = data.shape();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("a vine needs at least 2 variables, got {n}")));
    }
    if rows < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: rows });
    }
    if let Truncation::Fixed(k) = config.truncation {
        if k < 1 || k > n - 1 {
            return Err(Error::InvalidConfig(format!("truncation level {k} outside 1..={}", n - 1)));
        }
    }
    let margins = fit_columns(config.margins, data)?;
    let u = to_uniform(&margins, data);
    let mut order = select_structure(kind, &u, config.structure)?.order;
    let greedy_c = kind == VineKind::C && config.structure == StructureMode::Greedy;

    let mut level = first_level(kind, &order, &u);
    let mut trees: Vec<Vec<BivCopula>> = Vec::with_capacity(n - 1);
    let mut cum_ll = 0.0;
    let mut cum_k = 0;
    let mut prev_ic = f64::INFINITY;
    let mut truncation_level = n - 1;

    for j in 0..n - 1 {
        if let Truncation::Fixed(k) = config.truncation {
            if j >= k {
                truncation_level = k;
                break;
            }
        }
        if greedy_c && j > 0 {
            if let Level::C { cols } = &mut level {
                // re-select the root among the remaining variables
                let w = structure::abs_tau_matrix(cols)?;
                let cand: Vec<usize> = (0..cols.len()).collect();
                let mut by_label: Vec<usize> = cand.clone();
                by_label.sort_by_key(|&i| order[j + i]);
                let r = structure::heaviest_node(&w, &by_label);
                cols.swap(0, r);
                order.swap(j, j + r);
                // earlier trees index their edges by position in `order`
                for (k, tree) in trees.iter_mut().enumerate() {
                    tree.swap(j - k - 1, j + r - k - 1);
                }
            }
        }
        let mut copulas = Vec::with_capacity(level.edges());
        let mut ll = 0.0;
        for i in 0..level.edges() {
            let (a, b) = level.pair(i);
            let c = if rows < 10 {
                BivCopula::Product
            } else {
                let ps = PseudoSample::from_ranks(a, b)?;
                let s = seed::derive(rng_seed, &[j as u64, i as u64]);
                select_copula_at_level(&ps, &config.families, config.independence_level, s)?
            };
            ll += edge_loglik(&c, a, b);
            copulas.push(c);
        }
        let k: usize = copulas.iter().map(|c| c.parameter_count()).sum();
        if let Truncation::Aic | Truncation::Bic = config.truncation {
            let mode = if config.truncation == Truncation::Aic { Criterion::Aic } else { Criterion::Bic };
            let ic = criterion(mode, cum_ll + ll, cum_k + k, rows);
            if j > 0 && ic >= prev_ic {
                truncation_level = j;
                break;
            }
            prev_ic = ic;
        }
        if !ll.is_finite() {
            return Err(Error::NonFinite("vine log-likelihood"));
        }
        cum_ll += ll;
        cum_k += k;
        if j + 1 < n - 1 {
            level = level.next(&copulas);
        }
        trees.push(copulas);
    }
    for j in trees.len()..n - 1 {
        trees.push(vec![BivCopula::Product; n - 1 - j]);
    }
    Ok(VineModel { structure: VineStructure { kind, order }, trees, truncation_level, margins })
}

impl VineModel {
    pub fn dim(&self) -> usize {
        self.margins.len()
    }

    /// Pair-copula log-likelihood of each tree, evaluated on the conditional
    /// observations of the margin-transformed `data`.
    pub fn tree_logliks(&self, data: &DMatrix<f64>) -> Vec<f64> {
        let u = to_uniform(&self.margins, data);
        let mut level = first_level(self.structure.kind, &self.structure.order, &u);
        let mut out = Vec::with_capacity(self.trees.len());
        for (j, copulas) in self.trees.iter().enumerate() {
            out.push((0..copulas.len()).map(|i| {
                let (a, b) = level.pair(i);
                edge_loglik(&copulas[i], a, b)
            }).sum());
            if j + 1 < self.trees.len() {
                level = level.next(copulas);
            }
        }
        out
    }

    /// Log density at one point: margin log densities plus every pair-copula
    /// term.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch { left: x.len(), right: self.dim() });
        }
        let row = DMatrix::from_row_slice(1, x.len(), x);
        let margins: f64 = self.margins.iter().zip(x).map(|(m, &v)| m.ln_pdf(v)).sum();
        let total = margins + self.tree_logliks(&row).iter().sum::<f64>();
        if !total.is_finite() {
            return Err(Error::NonFinite("vine log density"));
        }
        Ok(total)
    }

    /// Draws `count` individuals by inverting the conditional distributions
    /// one variable at a time.
    pub fn sample(&self, count: usize, rng_seed: u64) -> Result<DMatrix<f64>> {
        let mut out = self.sample_uniform(count, rng_seed);
        crate::mvmodel::apply_margins(&self.margins, &mut out, |u| u)?;
        Ok(out)
    }

    /// Copula-scale draws, columns in variable (not structure) order.
    pub fn sample_uniform(&self, count: usize, rng_seed: u64) -> DMatrix<f64> {
        let mut rng = seed::rng(rng_seed);
        let n = self.dim();
        let mut out = DMatrix::zeros(count, n);
        let mut w = vec![0.0; n];
        for r in 0..count {
            for x in w.iter_mut() {
                *x = clamp_prob(rng.random::<f64>());
            }
            let z = self.invert(&w);
            for (k, &var) in self.structure.order.iter().enumerate() {
                out[(r, var)] = z[k];
            }
        }
        out
    }

    /// Maps independent uniforms `w` (structure order) to a draw from the
    /// vine copula (structure order).
    pub fn invert(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        let t = &self.trees;
        match self.structure.kind {
            VineKind::C => {
                // v[i][j] = F(x_i | x_0..x_{j-1})
                let mut v = vec![vec![0.0; n]; n];
                let mut x = vec![0.0; n];
                x[0] = w[0];
                v[0][0] = w[0];
                for i in 1..n {
                    let mut z = w[i];
                    for k in (0..i).rev() {
                        z = t[k][i - k - 1].h_inv(z, v[k][k]);
                    }
                    x[i] = z;
                    v[i][0] = z;
                    if i + 1 < n {
                        for j in 0..i {
                            v[i][j + 1] = t[j][i - j - 1].h(v[i][j], v[j][j]);
                        }
                    }
                }
                x
            }
            VineKind::D => {
                // right[j][i] = F(x_i | x_{i+1..i+j}), left[j][i] = F(x_{i+j} | x_{i..i+j-1})
                let mut right = vec![vec![0.0; n]; n];
                let mut left = vec![vec![0.0; n]; n];
                let mut x = vec![0.0; n];
                for k in 0..n {
                    left[k][0] = w[k];
                    for j in (0..k).rev() {
                        left[j][k - j] = t[j][k - j - 1].h_given_first_inv(left[j + 1][k - j - 1], right[j][k - j - 1]);
                    }
                    x[k] = left[0][k];
                    right[0][k] = x[k];
                    for j in 0..k {
                        right[j + 1][k - j - 1] = t[j][k - j - 1].h(right[j][k - j - 1], left[j][k - j]);
                    }
                }
                x
            }
        }
    }
}

/// AIC or BIC of the pair copulas in trees `1..=up_to_tree`.
pub fn information_criterion(model: &VineModel, data: &DMatrix<f64>, mode: Criterion, up_to_tree: usize) -> Result<f64> {
    if up_to_tree < 1 || up_to_tree > model.trees.len() {
        return Err(Error::InvalidConfig(format!("tree {up_to_tree} outside 1..={}", model.trees.len())));
    }
    let ll: f64 = model.tree_logliks(data)[..up_to_tree].iter().sum();
    let k: usize = model.trees[..up_to_tree].iter().flatten().map(|c| c.parameter_count()).sum();
    Ok(criterion(mode, ll, k, data.nrows()))
}

#[cfg(test)]
mod tests;
