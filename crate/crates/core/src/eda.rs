//! The generational EDA loop: uniform initialization, truncation selection,
//! model fitting and sampling until the optimum is reached or the evaluation
//! budget runs out.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::margins::MarginKind;
use crate::mvmodel::{self, ModelKind};
use crate::vine::{self, FitConfig, StructureMode, Truncation, VineKind};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Whether `a` is strictly better than `b`. NaN is worse than anything.
    pub fn better(self, a: f64, b: f64) -> bool {
        match (a.is_nan(), b.is_nan()) {
            (true, _) => false,
            (false, true) => true,
            _ => match self {
                Direction::Minimize => a < b,
                Direction::Maximize => a > b,
            },
        }
    }

    fn key(self, f: f64) -> f64 {
        if f.is_nan() {
            f64::INFINITY
        } else {
            match self {
                Direction::Minimize => f,
                Direction::Maximize => -f,
            }
        }
    }
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::InvalidConfig(format!("empty interval [{lo}, {hi}]")))
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An optimization problem with a known optimum value.
#[derive(Clone)]
pub struct Problem {
    pub objective: Objective,
    pub direction: Direction,
    pub optimum_value: f64,
    pub init_box: Vec<Interval>,
}

impl Problem {
    pub fn new(objective: Objective, direction: Direction, optimum_value: f64, init_box: Vec<Interval>) -> Result<Self> {
        if init_box.is_empty() {
            return Err(Error::InvalidConfig("problem dimension must be at least 1".into()));
        }
        Ok(Problem { objective, direction, optimum_value, init_box })
    }

    pub fn dimension(&self) -> usize {
        self.init_box.len()
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("direction", &self.direction)
            .field("optimum_value", &self.optimum_value)
            .field("init_box", &self.init_box)
            .finish_non_exhaustive()
    }
}

/// The search model: UMDA, GCEDA, CVEDA or DVEDA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Umda,
    Gceda,
    Cveda,
    Dveda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Umda, Algorithm::Gceda, Algorithm::Cveda, Algorithm::Dveda];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Umda => "UMDA",
            Algorithm::Gceda => "GCEDA",
            Algorithm::Cveda => "CVEDA",
            Algorithm::Dveda => "DVEDA",
        }
    }

    pub fn is_vine(self) -> bool {
        matches!(self, Algorithm::Cveda | Algorithm::Dveda)
    }
}

/// Algorithm, margins and vine settings. `vine.margins` is ignored in
/// favour of `margins`. With a random structure, the seed in
/// `StructureMode::Random` is replaced by one derived per generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub margins: MarginKind,
    pub vine: FitConfig,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm, margins: MarginKind) -> Self {
        ModelSpec { algorithm, margins, vine: FitConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaConfig {
    pub population_size: usize,
    pub selection_fraction: f64,
    pub precision: f64,
    pub max_evaluations: usize,
    pub model: ModelSpec,
    pub seed: u64,
    pub record_trace: bool,
}

impl EdaConfig {
    pub const SELECTION_FRACTION: f64 = 0.3;
    pub const PRECISION: f64 = 1e-6;
    pub const MAX_EVALUATIONS: usize = 500_000;

    pub fn new(model: ModelSpec, population_size: usize, seed: u64) -> Self {
        EdaConfig {
            population_size,
            selection_fraction: Self::SELECTION_FRACTION,
            precision: Self::PRECISION,
            max_evaluations: Self::MAX_EVALUATIONS,
            model,
            seed,
            record_trace: false,
        }
    }

    /// Checks the configuration against a problem dimension.
    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidConfig(format!("population size {} below 2", self.population_size)));
        }
        if !(self.selection_fraction > 0.0 && self.selection_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("selection fraction {} outside (0, 1)", self.selection_fraction)));
        }
        selected_count(self.population_size, self.selection_fraction)?;
        if !(self.precision >= 0.0) {
            return Err(Error::InvalidConfig(format!("precision {}", self.precision)));
        }
        if self.model.algorithm.is_vine() {
            if dimension < 2 {
                return Err(Error::InvalidConfig("a vine needs at least 2 variables".into()));
            }
            if let Truncation::Fixed(k) = self.model.vine.truncation {
                if k < 1 || k > dimension - 1 {
                    return Err(Error::InvalidConfig(format!("truncation level {k} outside 1..={}", dimension - 1)));
                }
            }
        }
        Ok(())
    }
}

/// Summary of one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best value found so far.
    pub best: f64,
    /// Mean objective value of the population.
    pub mean: f64,
    /// Per-variable mean of the selected individuals.
    pub selected_mean: Vec<f64>,
    /// Per-variable sample variance of the selected individuals.
    pub selected_var: Vec<f64>,
    /// Truncation level of the vine fitted to the selection, if any.
    pub truncation_level: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Optimum,
    Budget,
    /// The selection could not be modelled (typically a zero-variance
    /// column after convergence).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub success: bool,
    pub termination: Termination,
    pub evaluations_used: usize,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub generations: usize,
    pub trace: Vec<GenerationRecord>,
}

fn selected_count(n: usize, fraction: f64) -> Result<usize> {
    let k = (fraction * n as f64 + 1e-9).floor() as usize;
    if k == 0 {
        Err(Error::EmptySelection { population: n, fraction })
    } else {
        Ok(k)
    }
}

/// Indices of the best `floor(fraction * N)` individuals, best first; ties
/// keep index order.
pub fn truncation_select(fitness: &[f64], fraction: f64, direction: Direction) -> Result<Vec<usize>> {
    if fitness.is_empty() {
        return Err(Error::EmptySelection { population: 0, fraction });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("selection fraction {fraction} outside (0, 1)")));
    }
    let k = selected_count(fitness.len(), fraction)?;
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| direction.key(fitness[a]).total_cmp(&direction.key(fitness[b])));
    idx.truncate(k);
    Ok(idx)
}

enum Fitted {
    Mv(mvmodel::MvModel),
    Vine(vine::VineModel),
}

impl Fitted {
    fn sample(&self, count: usize, s: u64) -> Result<DMatrix<f64>> {
        match self {
            Fitted::Mv(m) => m.sample(count, s),
            Fitted::Vine(m) => m.sample(count, s),
        }
    }
}

fn fit_model(spec: &ModelSpec, selected: &DMatrix<f64>, run_seed: u64, generation: usize) -> Result<Fitted> {
    let g = generation as u64;
    Ok(match spec.algorithm {
        Algorithm::Umda => Fitted::Mv(mvmodel::fit(ModelKind::Independence, selected, spec.margins)?),
        Algorithm::Gceda => Fitted::Mv(mvmodel::fit(ModelKind::GaussianCopula, selected, spec.margins)?),
        Algorithm::Cveda | Algorithm::Dveda => {
            let kind = if spec.algorithm == Algorithm::Cveda { VineKind::C } else { VineKind::D };
            let mut cfg = spec.vine.clone();
            cfg.margins = spec.margins;
            if let StructureMode::Random(_) = cfg.structure {
                cfg.structure = StructureMode::Random(seed::derive(run_seed, &[3, g]));
            }
            Fitted::Vine(vine::fit(selected, kind, &cfg, seed::derive(run_seed, &[1, g]))?)
        }
    })
}

fn column_moments(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let ss: f64 = c.iter().map(|x| (x - mean) * (x - mean)).sum();
            (mean, if n > 1.0 { ss / (n - 1.0) } else { 0.0 })
        })
        .unzip()
}

/// Runs the EDA until the best value is within `precision` of the optimum,
/// the evaluation budget is spent, or the selection cannot be modelled.
///
/// Every generation, including the initial one, costs `population_size`
/// evaluations; the loop stops once the total reaches `max_evaluations`.
pub fn run(problem: &Problem, config: &EdaConfig) -> Result<RunResult> {
    let n = problem.dimension();
    config.validate(n)?;
    let size = config.population_size;
    let dir = problem.direction;

    let mut rng = seed::rng(seed::derive(config.seed, &[0]));
    let mut pop = DMatrix::from_fn(size, n, |_, j| {
        let b = problem.init_box[j];
        b.lo + (b.hi - b.lo) * rng.random::<f64>()
    });

    let mut best_value = f64::NAN;
    let mut best_point = vec![0.0; n];
    let mut evaluations = 0;
    let mut trace = Vec::new();
    let mut generation = 0;
    let mut x = vec![0.0; n];

    let termination = loop {
        let fitness: Vec<f64> = (0..size)
            .map(|i| {
                for (j, v) in x.iter_mut().enumerate() {
                    *v = pop[(i, j)];
                }
                (problem.objective)(&x)
            })
            .collect();
        evaluations += size;
        generation += 1;

        let sel = truncation_select(&fitness, config.selection_fraction, dir)?;
        if dir.better(fitness[sel[0]], best_value) {
            best_value = fitness[sel[0]];
            best_point = pop.row(sel[0]).iter().copied().collect();
        }
        let selected = pop.select_rows(sel.iter());

        let reached = (best_value - problem.optimum_value).abs() <= config.precision;
        let done = if reached {
            Some(Termination::Optimum)
        } else if evaluations >= config.max_evaluations {
            Some(Termination::Budget)
        } else {
            None
        };

        let model = match done {
            Some(_) => None,
            None => Some(fit_model(&config.model, &selected, config.seed, generation)),
        };

        if config.record_trace {
            let (selected_mean, selected_var) = column_moments(&selected);
            let finite: Vec<f64> = fitness.iter().copied().filter(|f| f.is_finite()).collect();
            trace.push(GenerationRecord {
                generation: generation - 1,
                best: best_value,
                mean: finite.iter().sum::<f64>() / finite.len() as f64,
                selected_mean,
                selected_var,
                truncation_level: match &model {
                    Some(Ok(Fitted::Vine(v))) => Some(v.truncation_level),
                    _ => None,
                },
            });
        }

        if let Some(t) = done {
            break t;
        }
        match model.expect("fitted when not done").and_then(|m| m.sample(size, seed::derive(config.seed, &[2, generation as u64]))) {
            Ok(next) => pop = next,
            Err(_) => break Termination::Degenerate,
        }
    };

    Ok(RunResult {
        success: termination == Termination::Optimum,
        termination,
        evaluations_used: evaluations,
        best_value,
        best_point,
        generations: generation,
        trace,
    })
}
