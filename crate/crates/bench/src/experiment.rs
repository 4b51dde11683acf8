//! Experiment rows: critical population search followed by the statistics
//! reported in the result tables.

use std::collections::HashMap;

use copula_eda::bicop::Family;
use copula_eda::eda::{self, Algorithm, EdaConfig, Interval, ModelSpec, RunResult};
use copula_eda::margins::MarginKind;
use copula_eda::seed;
use copula_eda::vine::{StructureMode, Truncation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bisection::{critical_population, Bisection, BisectionConfig};
use crate::functions::{interval_label, BenchmarkFunction, BoxKind};

/// One row of a result table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub function: BenchmarkFunction,
    pub dimension: usize,
    pub interval: Interval,
    pub model: ModelSpec,
}

impl ExperimentSpec {
    pub fn new(function: BenchmarkFunction, box_kind: BoxKind, model: ModelSpec) -> Self {
        ExperimentSpec { function, dimension: 10, interval: function.interval(box_kind), model }
    }

    /// Algorithm label such as `UMDA_g` or `CVEDA_AIC,greedy,g`.
    pub fn label(&self) -> String {
        let m = match self.model.margins {
            MarginKind::Normal => "g",
            MarginKind::Kernel => "e",
        };
        let algo = self.model.algorithm.name();
        if !self.model.algorithm.is_vine() {
            return format!("{algo}_{m}");
        }
        let v = &self.model.vine;
        let trunc = match v.truncation {
            Truncation::Fixed(k) => k.to_string(),
            Truncation::Aic => "AIC".into(),
            Truncation::Bic => "BIC".into(),
        };
        let structure = match v.structure {
            StructureMode::Greedy => "greedy",
            StructureMode::Random(_) => "random",
        };
        let mut fams: Vec<Family> = v.families.iter().copied().filter(|f| *f != Family::Product).collect();
        fams.sort();
        fams.dedup();
        let prefix = if fams == [Family::Normal] { "N," } else { "" };
        format!("{algo}_{prefix}{trunc},{structure},{m}")
    }
}

/// Runs per probe and how many must succeed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub runs: usize,
    pub required: usize,
}

impl Scale {
    pub const DESK: Scale = Scale { runs: 10, required: 10 };
    pub const FULL: Scale = Scale { runs: 30, required: 30 };
}

/// The CSV-facing summary of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub algorithm: String,
    pub function: String,
    pub box_label: String,
    pub successes: usize,
    pub runs: usize,
    pub population: usize,
    pub evals_mean: f64,
    pub evals_std: f64,
    pub best_mean: f64,
    pub best_std: f64,
}

/// A result with the search history and the runs behind the statistics.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub result: ExperimentResult,
    pub bisection: Bisection,
    pub runs: Vec<RunResult>,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Evaluation statistics over successful runs (all runs when none
/// succeeded); best-value statistics over all runs.
pub fn summarize(spec: &ExperimentSpec, population: usize, runs: &[RunResult]) -> ExperimentResult {
    let successes = runs.iter().filter(|r| r.success).count();
    let evals: Vec<f64> =
        runs.iter().filter(|r| r.success || successes == 0).map(|r| r.evaluations_used as f64).collect();
    let best: Vec<f64> = runs.iter().map(|r| r.best_value).collect();
    let (evals_mean, evals_std) = mean_std(&evals);
    let (best_mean, best_std) = mean_std(&best);
    ExperimentResult {
        algorithm: spec.label(),
        function: spec.function.name().into(),
        box_label: interval_label(spec.interval),
        successes,
        runs: runs.len(),
        population,
        evals_mean,
        evals_std,
        best_mean,
        best_std,
    }
}

/// Options shared by every run of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub scale: Scale,
    pub bisection: BisectionConfig,
    pub max_evaluations: usize,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            scale: Scale::DESK,
            bisection: BisectionConfig::default(),
            max_evaluations: EdaConfig::MAX_EVALUATIONS,
            record_trace: false,
        }
    }
}

struct Prober<'a> {
    spec: &'a ExperimentSpec,
    opts: RunOptions,
    seed: u64,
    done: HashMap<usize, Vec<RunResult>>,
}

impl Prober<'_> {
    fn one(&self, size: usize, r: usize) -> RunResult {
        let problem = self.spec.function.problem(self.spec.dimension, self.spec.interval);
        let mut cfg = EdaConfig::new(self.spec.model.clone(), size, seed::derive(self.seed, &[size as u64, r as u64]));
        cfg.max_evaluations = self.opts.max_evaluations;
        cfg.record_trace = self.opts.record_trace;
        eda::run(&problem, &cfg).expect("experiment configs are validated up front")
    }

    /// Runs at `size` until the outcome is decided, or all runs if `full`.
    fn probe(&mut self, size: usize, full: bool) -> bool {
        let Scale { runs, required } = self.opts.scale;
        let allowed = runs - required;
        let mut results = self.done.remove(&size).unwrap_or_default();
        let chunk = rayon::current_num_threads().max(1);
        loop {
            let failures = results.iter().filter(|r| !r.success).count();
            if results.len() == runs || (!full && failures > allowed) {
                break;
            }
            let next: Vec<usize> = (results.len()..runs.min(results.len() + chunk)).collect();
            let batch: Vec<RunResult> = next.par_iter().map(|&r| self.one(size, r)).collect();
            results.extend(batch);
        }
        let pass = results.iter().filter(|r| r.success).count() >= required;
        self.done.insert(size, results);
        pass
    }
}

/// Checks that an experiment can run: population sizes, model settings.
pub fn validate(spec: &ExperimentSpec, opts: &RunOptions) -> Result<(), String> {
    opts.bisection.validate()?;
    if opts.scale.runs == 0 || opts.scale.required > opts.scale.runs {
        return Err(format!("need 1 <= required ({}) <= runs ({})", opts.scale.required, opts.scale.runs));
    }
    if spec.dimension == 0 {
        return Err("dimension must be at least 1".into());
    }
    let cfg = EdaConfig::new(spec.model.clone(), opts.bisection.initial_size, 0);
    cfg.validate(spec.dimension).map_err(|e| e.to_string())
}

/// Finds the critical population, then reports statistics over the runs at
/// that size. Run `r` at size `n` is seeded by `(seed, n, r)`, so the
/// reported runs are the ones that decided the passing probe. Without a
/// passing size, all runs at the cap are reported.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions, seed: u64) -> Result<Experiment, String> {
    validate(spec, opts)?;
    let mut prober = Prober { spec, opts: *opts, seed, done: HashMap::new() };
    let bisection = critical_population(&opts.bisection, |n| prober.probe(n, false));
    if !bisection.found {
        prober.probe(bisection.size, true);
    }
    let runs = prober.done.remove(&bisection.size).expect("the reported size was probed");
    Ok(Experiment { result: summarize(spec, bisection.size, &runs), bisection, runs })
}

/// Runs `scale.runs` seeded runs at a fixed population size.
pub fn run_fixed(spec: &ExperimentSpec, opts: &RunOptions, population: usize, seed: u64) -> Result<Experiment, String> {
    let fixed = RunOptions { bisection: BisectionConfig { initial_size: population.max(4), max_size: population.max(4), ..opts.bisection }, ..*opts };
    validate(spec, &fixed)?;
    let mut prober = Prober { spec, opts: fixed, seed, done: HashMap::new() };
    let pass = prober.probe(population, true);
    let runs = prober.done.remove(&population).expect("probed");
    let bisection = Bisection { size: population, found: pass, probes: vec![(population, pass)] };
    Ok(Experiment { result: summarize(spec, population, &runs), bisection, runs })
}

fn mv(algorithm: Algorithm, margins: MarginKind) -> ModelSpec {
    ModelSpec::new(algorithm, margins)
}

fn vine(algorithm: Algorithm, truncation: Truncation, structure: StructureMode, normal_only: bool) -> ModelSpec {
    let mut m = ModelSpec::new(algorithm, MarginKind::Normal);
    m.vine.truncation = truncation;
    m.vine.structure = structure;
    if normal_only {
        m.vine.families = vec![Family::Normal];
    }
    m
}

/// Preset rows of the paper's result tables 1 to 12 (n = 10).
pub fn table(k: u8) -> Option<Vec<ExperimentSpec>> {
    use Algorithm::*;
    use BenchmarkFunction::*;
    use MarginKind::{Kernel, Normal};
    let full = Truncation::Fixed(9);
    let greedy = StructureMode::Greedy;
    let random = StructureMode::Random(0);
    let mv_rows = |f: BenchmarkFunction| {
        [BoxKind::Symmetric, BoxKind::Asymmetric]
            .into_iter()
            .flat_map(move |b| {
                [(Umda, Normal), (Umda, Kernel), (Gceda, Normal), (Gceda, Kernel)]
                    .map(|(a, m)| ExperimentSpec::new(f, b, mv(a, m)))
            })
            .collect::<Vec<_>>()
    };
    let sym = |f: BenchmarkFunction, m: ModelSpec| ExperimentSpec::new(f, BoxKind::Symmetric, m);
    let truncation_rows = |f: BenchmarkFunction| {
        [Cveda, Dveda]
            .into_iter()
            .flat_map(|a| {
                [Truncation::Fixed(3), Truncation::Fixed(6), Truncation::Aic, Truncation::Bic]
                    .map(|t| sym(f, vine(a, t, greedy, false)))
            })
            .collect::<Vec<_>>()
    };
    Some(match k {
        1 => mv_rows(Sphere),
        2 => mv_rows(Griewank),
        3 => mv_rows(Ackley),
        4 => mv_rows(SummationCancellation),
        5 => vec![sym(Sphere, vine(Cveda, full, greedy, false)), sym(Sphere, vine(Dveda, full, greedy, false))],
        6 => vec![sym(Griewank, vine(Cveda, full, greedy, false)), sym(Griewank, vine(Dveda, full, greedy, false))],
        7 => vec![sym(Ackley, vine(Cveda, full, greedy, false)), sym(Ackley, vine(Dveda, full, greedy, false))],
        8 => vec![
            sym(SummationCancellation, vine(Cveda, full, greedy, false)),
            sym(SummationCancellation, vine(Cveda, full, greedy, true)),
            sym(SummationCancellation, vine(Dveda, full, greedy, false)),
            sym(SummationCancellation, vine(Dveda, full, greedy, true)),
        ],
        9 => truncation_rows(Sphere),
        10 => truncation_rows(SummationCancellation),
        11 => vec![
            sym(Sphere, vine(Cveda, Truncation::Bic, random, false)),
            sym(Sphere, vine(Dveda, Truncation::Bic, random, false)),
        ],
        12 => vec![
            sym(SummationCancellation, vine(Cveda, Truncation::Aic, random, false)),
            sym(SummationCancellation, vine(Dveda, Truncation::Aic, random, false)),
        ],
        _ => return None,
    })
}

/// CSV record layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct CsvRow {
    pub algorithm: String,
    pub function: String,
    #[serde(rename = "box")]
    pub box_label: String,
    pub success: String,
    pub population: usize,
    pub evals_mean: f64,
    pub evals_std: f64,
    pub best_mean: f64,
    pub best_std: f64,
}

impl From<&ExperimentResult> for CsvRow {
    fn from(r: &ExperimentResult) -> Self {
        CsvRow {
            algorithm: r.algorithm.clone(),
            function: r.function.clone(),
            box_label: r.box_label.clone(),
            success: format!("{}/{}", r.successes, r.runs),
            population: r.population,
            evals_mean: r.evals_mean,
            evals_std: r.evals_std,
            best_mean: r.best_mean,
            best_std: r.best_std,
        }
    }
}

impl TryFrom<CsvRow> for ExperimentResult {
    type Error = String;

    fn try_from(r: CsvRow) -> Result<Self, Self::Error> {
        let (s, n) = r.success.split_once('/').ok_or_else(|| format!("bad success field `{}`", r.success))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad success field `{}`: {e}", r.success));
        Ok(ExperimentResult {
            successes: parse(s)?,
            runs: parse(n)?,
            algorithm: r.algorithm,
            function: r.function,
            box_label: r.box_label,
            population: r.population,
            evals_mean: r.evals_mean,
            evals_std: r.evals_std,
            best_mean: r.best_mean,
            best_std: r.best_std,
        })
    }
}

pub fn write_csv<W: std::io::Write>(out: W, results: &[ExperimentResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(CsvRow::from(r))?;
    }
    if results.is_empty() {
        w.write_record(["algorithm", "function", "box", "success", "population", "evals_mean", "evals_std", "best_mean", "best_std"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ExperimentResult>, String> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize::<CsvRow>()
        .map(|row| row.map_err(|e| e.to_string()).and_then(ExperimentResult::try_from))
        .collect()
}

/// Writes the per-generation trace of every reported run.
pub fn write_trace<W: std::io::Write>(out: W, experiments: &[Experiment]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let n = experiments.iter().map(|e| e.runs.iter().flat_map(|r| r.trace.first()).map(|g| g.selected_var.len()).max().unwrap_or(0)).max().unwrap_or(0);
    let mut header: Vec<String> = ["algorithm", "function", "run", "generation", "best", "mean"].map(String::from).to_vec();
    header.extend((1..=n).map(|i| format!("var_{i}")));
    w.write_record(&header)?;
    for e in experiments {
        for (r, run) in e.runs.iter().enumerate() {
            for g in &run.trace {
                let mut rec = vec![e.result.algorithm.clone(), e.result.function.clone(), r.to_string(), g.generation.to_string(), g.best.to_string(), g.mean.to_string()];
                rec.extend(g.selected_var.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
