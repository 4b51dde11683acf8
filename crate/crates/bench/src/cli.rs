//! The `veda` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use copula_eda::bicop::Family;
use copula_eda::eda::{Algorithm, Interval, ModelSpec};
use copula_eda::margins::MarginKind;
use copula_eda::vine::{StructureMode, Truncation};
use rayon::prelude::*;

use crate::experiment::{self, Experiment, ExperimentSpec, RunOptions, Scale};
use crate::functions::{BenchmarkFunction, BoxKind};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    Umda,
    Gceda,
    Cveda,
    Dveda,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MarginArg {
    Normal,
    Kernel,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StructureArg {
    Greedy,
    Random,
}

/// Copula EDA benchmark runner. Prints one CSV row per experiment.
#[derive(Debug, Parser)]
#[command(name = "veda", version)]
struct Args {
    /// Test function: sphere, griewank, ackley or sumcan.
    #[arg(long)]
    function: Option<BenchmarkFunction>,
    /// Problem dimension.
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, value_enum, default_value = "umda")]
    algo: AlgoArg,
    #[arg(long, value_enum, default_value = "normal")]
    margins: MarginArg,
    /// Initialisation box LO:HI applied to every variable (default: the
    /// function's symmetric box).
    #[arg(long = "box", value_name = "LO:HI", allow_hyphen_values = true)]
    box_: Option<String>,
    /// Vine truncation: a tree count, aic or bic (default: all trees).
    #[arg(long)]
    truncation: Option<String>,
    #[arg(long, value_enum, default_value = "greedy")]
    structure: StructureArg,
    /// Comma separated pair-copula families (product, normal, t, clayton,
    /// rclayton, gumbel, rgumbel). Default: all seven.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Runs per population size; all must succeed.
    #[arg(long)]
    runs: Option<usize>,
    /// Use 30 runs per population size instead of 10.
    #[arg(long)]
    full: bool,
    /// Run at this population size instead of searching for the critical one.
    #[arg(long)]
    population: Option<usize>,
    /// Evaluation budget per run.
    #[arg(long, default_value_t = 500_000)]
    max_evaluations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write per-generation traces of the reported runs to this file.
    #[arg(long)]
    trace: Option<std::path::PathBuf>,
    /// Run the preset rows of result table K (1 to 12).
    #[arg(long)]
    table: Option<u8>,
    /// Output CSV file (default: standard output).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    Ok(match s.trim().to_ascii_lowercase().as_str() {
        "product" | "independence" => Family::Product,
        "normal" | "gaussian" => Family::Normal,
        "t" | "student" | "studentt" => Family::StudentT,
        "clayton" => Family::Clayton,
        "rclayton" | "rotclayton" => Family::RotClayton,
        "gumbel" => Family::Gumbel,
        "rgumbel" | "rotgumbel" => Family::RotGumbel,
        other => return Err(format!("unknown copula family `{other}`")),
    })
}

fn parse_box(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("box `{s}` is not LO:HI"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("box `{s}`: {e}"));
    Interval::new(num(lo)?, num(hi)?).map_err(|e| e.to_string())
}

fn parse_truncation(s: &str, dim: usize) -> Result<Truncation, String> {
    match s.to_ascii_lowercase().as_str() {
        "aic" => Ok(Truncation::Aic),
        "bic" => Ok(Truncation::Bic),
        k => {
            let k: usize = k.parse().map_err(|_| format!("truncation `{s}` is not a number, aic or bic"))?;
            if k == 0 || k + 1 > dim {
                return Err(format!("truncation {k} outside 1..={} for dimension {dim}", dim.saturating_sub(1)));
            }
            Ok(Truncation::Fixed(k))
        }
    }
}

fn single_spec(args: &Args) -> Result<ExperimentSpec, String> {
    let function = args.function.ok_or("either --function or --table is required")?;
    let algorithm = match args.algo {
        AlgoArg::Umda => Algorithm::Umda,
        AlgoArg::Gceda => Algorithm::Gceda,
        AlgoArg::Cveda => Algorithm::Cveda,
        AlgoArg::Dveda => Algorithm::Dveda,
    };
    let margins = match args.margins {
        MarginArg::Normal => MarginKind::Normal,
        MarginArg::Kernel => MarginKind::Kernel,
    };
    let mut model = ModelSpec::new(algorithm, margins);
    model.vine.truncation = match &args.truncation {
        Some(t) => parse_truncation(t, args.dim)?,
        None => Truncation::Fixed(args.dim.saturating_sub(1).max(1)),
    };
    model.vine.structure = match args.structure {
        StructureArg::Greedy => StructureMode::Greedy,
        StructureArg::Random => StructureMode::Random(0),
    };
    if let Some(list) = &args.families {
        let mut fams = list.iter().map(|s| parse_family(s)).collect::<Result<Vec<_>, _>>()?;
        fams.sort();
        fams.dedup();
        model.vine.families = fams;
    }
    let interval = match &args.box_ {
        Some(b) => parse_box(b)?,
        None => function.interval(BoxKind::Symmetric),
    };
    Ok(ExperimentSpec { function, dimension: args.dim, interval, model })
}

fn run(args: &Args) -> Result<(Vec<ExperimentSpec>, RunOptions), String> {
    let specs = match args.table {
        Some(k) => experiment::table(k).ok_or_else(|| format!("no preset for table {k}; use 1 to 12"))?,
        None => vec![single_spec(args)?],
    };
    let runs = args.runs.unwrap_or(if args.full { Scale::FULL.runs } else { Scale::DESK.runs });
    let opts = RunOptions {
        scale: Scale { runs, required: runs },
        max_evaluations: args.max_evaluations,
        record_trace: args.trace.is_some(),
        ..RunOptions::default()
    };
    for spec in &specs {
        experiment::validate(spec, &opts)?;
    }
    if let Some(p) = args.population {
        if p < 2 {
            return Err(format!("population {p} below 2"));
        }
    }
    Ok((specs, opts))
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 2 on invalid configuration, 1 on I/O failure.
pub fn main<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (specs, opts) = match run(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("veda: {e}");
            return ExitCode::from(2);
        }
    };
    let results: Result<Vec<Experiment>, String> = specs
        .par_iter()
        .map(|s| match args.population {
            Some(p) => experiment::run_fixed(s, &opts, p, args.seed),
            None => experiment::run_experiment(s, &opts, args.seed),
        })
        .collect();
    let experiments = match results {
        Ok(e) => e,
        Err(e) => {
            eprintln!("veda: {e}");
            return ExitCode::from(2);
        }
    };
    match write_outputs(&args, &experiments) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("veda: {e}");
            ExitCode::from(1)
        }
    }
}

fn write_outputs(args: &Args, experiments: &[Experiment]) -> Result<(), Box<dyn std::error::Error>> {
    let rows: Vec<_> = experiments.iter().map(|e| e.result.clone()).collect();
    match &args.out {
        Some(path) => experiment::write_csv(File::create(path)?, &rows)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            experiment::write_csv(&mut lock, &rows)?;
            lock.flush()?;
        }
    }
    if let Some(path) = &args.trace {
        experiment::write_trace(File::create(path)?, experiments)?;
    }
    Ok(())
}
