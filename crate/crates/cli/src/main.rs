//! wflo: command-line driver for the wind-farm layout optimization suite.
//!
//! Every subcommand writes fixed-name artifacts into `--out` (default: the
//! current directory) and prints a short summary to stdout. Artifact JSON
//! uses a fixed float format, and wall times are zeroed unless
//! `--keep-timings` is given, so equal-seed invocations produce byte-identical
//! files. Benchmark timings in `scaling.json` are the exception: measuring
//! them is the point, so they vary run to run.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wflo_core::dea::dea_check;
use wflo_core::harness::{
    enumerate_degenerate, heatmap_to_csv, mean_placement, percent_of_optimal_powers,
    records_to_csv, run_experiment_with_workers, selected_powers, split_seed, zero_timings,
    ExperimentConfig, Method, RunRecord,
};
use wflo_core::jsonio::write_artifact_json;
use wflo_core::optimize::ENUMERATION_CAP;
use wflo_core::qubo::build_q;
use wflo_core::scaling::{fit_scaling, ScalingFit};
use wflo_core::stats::{box_stats, sample_mean, BoxStats};
use wflo_core::vqe::AnsatzSpec;
use wflo_core::wake::Scenario;
use wflo_core::Layout;

/// Largest Jacobian (in f64 entries) the redundancy check will allocate.
const DEA_ELEMENT_CAP: usize = 1 << 24;

/// Relative tolerance for counting a run as having hit the optimum.
const OPTIMUM_REL_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "wflo",
    version,
    about = "Wind-farm layout optimization: QUBO construction, CVaR-VQE and classical solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the wind-farm QUBO and write qubo.json.
    BuildQubo {
        #[command(flatten)]
        problem: ProblemOpts,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Run one seeded solve and write records.json / records.csv.
    Solve {
        #[command(flatten)]
        problem: ProblemOpts,
        #[command(flatten)]
        solver: SolverOpts,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Run a farm of independent seeded solves and write records.json / records.csv.
    Farm {
        #[command(flatten)]
        problem: ProblemOpts,
        #[command(flatten)]
        solver: SolverOpts,
        /// Number of independent runs.
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Enumerate every layout attaining the optimal power and write optimal.json.
    EnumerateOptimal {
        #[command(flatten)]
        problem: ProblemOpts,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Average the optimal layouts into a placement heatmap and write heatmap.csv.
    Heatmap {
        #[command(flatten)]
        problem: ProblemOpts,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Time a solver across grid sizes, fit the power law, and write scaling.json.
    Bench {
        /// Solver to time.
        #[arg(long, value_parser = parse_method, default_value = "sa")]
        method: Method,
        /// Comma-separated grid side lengths, e.g. 2,3,4 (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        /// Runs per grid; the mean wall time becomes the fitted data point.
        #[arg(long, default_value_t = 3)]
        runs: usize,
        /// Required turbine count m (must fit every grid).
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// CVaR tail fraction in (0, 1] for VQE methods.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Measurement shots per objective evaluation.
        #[arg(long, default_value_t = 1024)]
        shots: usize,
        /// Ansatz layers (default: one per qubit).
        #[arg(long)]
        layers: Option<usize>,
        /// Master seed for run-seed splitting.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Check the ansatz parameters for redundancy and write dea.json.
    DeaCheck {
        /// Grid side length (the register has l² qubits).
        #[arg(long, default_value_t = 2)]
        l_grid: usize,
        /// Ansatz layers (default: one per qubit).
        #[arg(long)]
        layers: Option<usize>,
        /// Seed for the random probe angles.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Summarize run records or a JSON array of powers; writes stats.json.
    Stats {
        /// Input file: records.json or a plain JSON array of numbers.
        #[arg(long)]
        input: PathBuf,
        /// Optimal power in kW for percent-of-optimal scoring.
        #[arg(long)]
        optimal: Option<f64>,
        #[command(flatten)]
        out: OutOpt,
    },
}

/// Problem selection shared by most subcommands; unset flags fall back to the
/// 4×4 benchmark (or to the scenario/config file when one is given).
#[derive(Args)]
struct ProblemOpts {
    /// Scenario JSON (wind arrangements, wake constants, grid side length).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Grid side length l (l² candidate sites).
    #[arg(long)]
    l_grid: Option<usize>,
    /// Required turbine count m.
    #[arg(long)]
    m: Option<usize>,
    /// Turbine-count penalty weight.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Minimum turbine separation (0 disables it; enforced by exhaustive search).
    #[arg(long)]
    xi: Option<f64>,
}

/// Solver selection for solve/farm.
#[derive(Args)]
struct SolverOpts {
    /// Experiment config JSON; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solver: exhaustive, sa, vqe-cobyla, vqe-powell, vqe-bo, or vqe-exact.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// CVaR tail fraction in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Measurement shots per objective evaluation.
    #[arg(long)]
    shots: Option<usize>,
    /// Ansatz layers (default: one per qubit).
    #[arg(long)]
    layers: Option<usize>,
    /// Master seed for run-seed splitting.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Keep measured wall times instead of zeroing them.
    #[arg(long)]
    keep_timings: bool,
}

#[derive(Args)]
struct OutOpt {
    /// Output directory for artifacts (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Serialize)]
struct OptimalArtifact {
    power_kw: f64,
    num_layouts: usize,
    layouts: Vec<String>,
}

#[derive(Serialize)]
struct BenchArtifact {
    method: String,
    grids: Vec<usize>,
    runs_per_grid: usize,
    mean_seconds: Vec<f64>,
    fit: ScalingFit,
}

#[derive(Serialize)]
struct DeaArtifact {
    num_qubits: usize,
    num_layers: usize,
    parameter_count: usize,
    independent_count: usize,
    verdicts: Vec<bool>,
    theta: Vec<f64>,
}

#[derive(Serialize)]
struct StatsArtifact {
    summary: BoxStats,
    percent_of_optimal: Option<f64>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::from_str(s).map_err(|e| e.to_string())
}

fn main() -> std::process::ExitCode {
    match run() {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::BuildQubo { problem, out } => cmd_build_qubo(&problem, &out.dir()?),
        Command::Solve {
            problem,
            solver,
            out,
        } => cmd_solve(&problem, &solver, &out.dir()?),
        Command::Farm {
            problem,
            solver,
            runs,
            out,
        } => cmd_farm(&problem, &solver, runs, &out.dir()?),
        Command::EnumerateOptimal { problem, out } => cmd_enumerate_optimal(&problem, &out.dir()?),
        Command::Heatmap { problem, out } => cmd_heatmap(&problem, &out.dir()?),
        Command::Bench {
            method,
            grids,
            runs,
            m,
            alpha,
            shots,
            layers,
            seed,
            workers,
            out,
        } => cmd_bench(
            method,
            &grids,
            runs,
            m,
            alpha,
            shots,
            layers,
            seed,
            workers,
            &out.dir()?,
        ),
        Command::DeaCheck {
            l_grid,
            layers,
            seed,
            out,
        } => cmd_dea_check(l_grid, layers, seed, &out.dir()?),
        Command::Stats {
            input,
            optimal,
            out,
        } => cmd_stats(&input, optimal, &out.dir()?),
    }
}

impl OutOpt {
    /// Output directory, created on demand.
    fn dir(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating output directory {}", self.out.display()))?;
        Ok(self.out.clone())
    }
}

/// Merges config file, scenario file, and flags into a validated config.
/// Precedence: flags over scenario file over config file over defaults.
fn resolve_config(
    problem: &ProblemOpts,
    solver: &SolverOpts,
    runs: Option<usize>,
) -> Result<ExperimentConfig> {
    let mut config = match &solver.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_json_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => {
            let method = solver
                .method
                .context("a solver is required: pass --method or --config")?;
            ExperimentConfig::benchmark(method)
        }
    };
    if let Some(path) = &problem.scenario {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        config.scenario = Scenario::from_json_str(&text)
            .with_context(|| format!("parsing scenario {}", path.display()))?;
    }
    if let Some(l) = problem.l_grid {
        config.scenario.l_grid = l;
    }
    if let Some(m) = problem.m {
        config.m = m;
    }
    if let Some(v) = problem.lambda1 {
        config.lambda1 = v;
    }
    if let Some(v) = problem.xi {
        config.xi = v;
    }
    if let Some(m) = solver.method {
        config.method = m;
    }
    if let Some(a) = solver.alpha {
        config.cvar_alpha = a;
    }
    if let Some(s) = solver.shots {
        config.shots = s;
    }
    if let Some(l) = solver.layers {
        config.layers = Some(l);
    }
    if let Some(s) = solver.seed {
        config.master_seed = s;
    }
    if let Some(r) = runs {
        config.num_runs = r;
    }
    config.validate()?;
    Ok(config)
}

/// Problem-only config for subcommands that do not take solver flags.
fn resolve_problem(problem: &ProblemOpts, method: Method) -> Result<ExperimentConfig> {
    let solver = SolverOpts {
        config: None,
        method: Some(method),
        alpha: None,
        shots: None,
        layers: None,
        seed: None,
        workers: None,
        keep_timings: false,
    };
    resolve_config(problem, &solver, None)
}

fn write_json_artifact<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    write_artifact_json(&path, value).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text_artifact(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_build_qubo(problem: &ProblemOpts, out: &Path) -> Result<()> {
    // SA has no size cap, so it stands in as the method for validation here.
    let config = resolve_problem(problem, Method::Sa)?;
    if config.xi > 0.0 {
        bail!("the QUBO covers the turbine-count constraint only; --xi needs exhaustive search");
    }
    let regime = config.scenario.regime()?;
    let geometry = config.scenario.geometry()?;
    let qubo = build_q(
        &regime,
        &config.scenario.wake,
        &geometry,
        config.lambda1,
        config.m,
    );
    write_json_artifact(out, "qubo.json", &qubo)?;
    println!(
        "{} sites, {} nonzero coefficients, constant offset {}",
        qubo.num_sites,
        qubo.nonzero_count(),
        qubo.constant_offset
    );
    Ok(())
}

fn cmd_solve(problem: &ProblemOpts, solver: &SolverOpts, out: &Path) -> Result<()> {
    let config = resolve_config(problem, solver, Some(1))?;
    let records = run_and_write(&config, solver, out)?;
    let record = &records[0];
    match (&record.selected_layout, record.power_kw) {
        (Some(bits), Some(power)) => {
            println!(
                "method {} selected {} at {} kW ({} objective evaluations)",
                record.method,
                bits,
                power,
                record.objective_history.len()
            );
            print_layout_grid(bits, config.scenario.l_grid);
        }
        _ => println!("method {} selected no feasible layout", record.method),
    }
    score_runs(&config, &records)
}

fn cmd_farm(
    problem: &ProblemOpts,
    solver: &SolverOpts,
    runs: Option<usize>,
    out: &Path,
) -> Result<()> {
    let config = resolve_config(problem, solver, runs)?;
    let records = run_and_write(&config, solver, out)?;
    score_runs(&config, &records)
}

/// Runs the farm, writes records.json / records.csv, and reports wall time.
fn run_and_write(
    config: &ExperimentConfig,
    solver: &SolverOpts,
    out: &Path,
) -> Result<Vec<RunRecord>> {
    let started = Instant::now();
    let mut records = run_experiment_with_workers(config, solver.workers)?;
    let elapsed = started.elapsed().as_secs_f64();
    if !solver.keep_timings {
        zero_timings(&mut records);
    }
    write_json_artifact(out, "records.json", &records)?;
    write_text_artifact(out, "records.csv", &records_to_csv(&records))?;
    println!(
        "{} run(s) of {} on the {}x{} grid in {elapsed:.2}s",
        records.len(),
        config.method,
        config.scenario.l_grid,
        config.scenario.l_grid
    );
    Ok(records)
}

/// Prints mean power and, when the grid is small enough to enumerate,
/// percent-of-optimal and the number of runs that hit the optimum.
fn score_runs(config: &ExperimentConfig, records: &[RunRecord]) -> Result<()> {
    let powers = selected_powers(records);
    if powers.is_empty() {
        println!("no run selected a feasible layout");
        return Ok(());
    }
    println!(
        "{} of {} run(s) selected a layout; mean power {} kW",
        powers.len(),
        records.len(),
        sample_mean(&powers)?
    );
    if config.scenario.l_grid * config.scenario.l_grid <= ENUMERATION_CAP {
        let mut probe = config.clone();
        probe.method = Method::Exhaustive;
        let (best, layouts) = enumerate_degenerate(&probe)?;
        let hits = powers
            .iter()
            .filter(|p| (**p - best).abs() <= OPTIMUM_REL_TOL * best)
            .count();
        println!(
            "optimum {best} kW ({} degenerate layouts): {hits} optimal run(s), mean at {:.2}% of optimum",
            layouts.len(),
            percent_of_optimal_powers(&powers, best)?
        );
    }
    Ok(())
}

/// Draws the layout as grid rows, X for a turbine and . for an empty site.
fn print_layout_grid(bitstring: &str, l_grid: usize) {
    for row in bitstring.as_bytes().chunks(l_grid) {
        let line: String = row
            .iter()
            .map(|&b| if b == b'1' { 'X' } else { '.' })
            .collect();
        println!("  {line}");
    }
}

fn cmd_enumerate_optimal(problem: &ProblemOpts, out: &Path) -> Result<()> {
    let config = resolve_problem(problem, Method::Exhaustive)?;
    let (power, layouts) = enumerate_degenerate(&config)?;
    let artifact = OptimalArtifact {
        power_kw: power,
        num_layouts: layouts.len(),
        layouts: layouts.iter().map(Layout::to_bitstring).collect(),
    };
    write_json_artifact(out, "optimal.json", &artifact)?;
    println!(
        "optimum {power} kW attained by {} layout(s) of {} turbines",
        artifact.num_layouts, config.m
    );
    Ok(())
}

fn cmd_heatmap(problem: &ProblemOpts, out: &Path) -> Result<()> {
    let config = resolve_problem(problem, Method::Exhaustive)?;
    let geometry = config.scenario.geometry()?;
    let (power, layouts) = enumerate_degenerate(&config)?;
    let heatmap = mean_placement(&layouts, &geometry)?;
    write_text_artifact(out, "heatmap.csv", &heatmap_to_csv(&heatmap))?;
    println!(
        "mean placement over {} optimal layout(s) at {power} kW; total mass {}",
        layouts.len(),
        heatmap.total()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    method: Method,
    grids: &[usize],
    runs: usize,
    m: usize,
    alpha: f64,
    shots: usize,
    layers: Option<usize>,
    seed: u64,
    workers: Option<usize>,
    out: &Path,
) -> Result<()> {
    if grids.len() < 2 {
        bail!("--grids needs at least two side lengths to fit a scaling law");
    }
    let mut points = Vec::with_capacity(grids.len());
    let mut mean_seconds = Vec::with_capacity(grids.len());
    for &l_grid in grids {
        let mut config = ExperimentConfig::benchmark(method);
        config.scenario.l_grid = l_grid;
        config.m = m;
        config.cvar_alpha = alpha;
        config.shots = shots;
        config.layers = layers;
        config.num_runs = runs;
        config.master_seed = seed;
        config.validate()?;
        let started = Instant::now();
        run_experiment_with_workers(&config, workers)?;
        let seconds = started.elapsed().as_secs_f64() / runs as f64;
        let volume = (l_grid * l_grid) as f64;
        println!("l_grid {l_grid}: {seconds:.6}s per run over {runs} run(s)");
        points.push((volume, seconds));
        mean_seconds.push(seconds);
    }
    let fit = fit_scaling(&points)?;
    println!(
        "fit: log10(seconds) = {} * log10(sites) + {}",
        fit.slope, fit.intercept
    );
    let artifact = BenchArtifact {
        method: method.name().to_string(),
        grids: grids.to_vec(),
        runs_per_grid: runs,
        mean_seconds,
        fit,
    };
    write_json_artifact(out, "scaling.json", &artifact)
}

fn cmd_dea_check(l_grid: usize, layers: Option<usize>, seed: u64, out: &Path) -> Result<()> {
    let num_qubits = l_grid * l_grid;
    let num_layers = layers.unwrap_or(num_qubits);
    let spec = AnsatzSpec::new(num_qubits, num_layers)?;
    let rows = 1usize << (num_qubits + 1);
    let elements = rows * spec.parameter_count();
    if elements > DEA_ELEMENT_CAP {
        bail!(
            "the Jacobian would hold {elements} entries (cap {DEA_ELEMENT_CAP}); \
             reduce --layers or --l-grid"
        );
    }
    // Probe angles drawn uniformly from [0, 2π) via the seed splitter.
    let theta: Vec<f64> = (0..spec.parameter_count())
        .map(|i| TAU * (split_seed(seed, i as u64) >> 11) as f64 / (1u64 << 53) as f64)
        .collect();
    let verdicts = dea_check(&spec, &theta)?;
    let independent_count = verdicts.iter().filter(|v| **v).count();
    let artifact = DeaArtifact {
        num_qubits,
        num_layers,
        parameter_count: spec.parameter_count(),
        independent_count,
        verdicts,
        theta,
    };
    write_json_artifact(out, "dea.json", &artifact)?;
    println!(
        "{} of {} parameters independent ({} qubits, {} layers)",
        artifact.independent_count, artifact.parameter_count, num_qubits, num_layers
    );
    let redundant: Vec<String> = artifact
        .verdicts
        .iter()
        .enumerate()
        .filter(|(_, v)| !**v)
        .map(|(k, _)| k.to_string())
        .collect();
    if !redundant.is_empty() {
        println!("redundant parameter indices: {}", redundant.join(", "));
    }
    Ok(())
}

fn cmd_stats(input: &Path, optimal: Option<f64>, out: &Path) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {} as JSON", input.display()))?;
    let powers = extract_powers(&value)?;
    if powers.is_empty() {
        bail!("{} holds no power values to summarize", input.display());
    }
    let summary = box_stats(&powers)?;
    let percent_of_optimal = match optimal {
        Some(best) => Some(percent_of_optimal_powers(&powers, best)?),
        None => None,
    };
    println!(
        "{} value(s): mean {}, median {}, quartiles [{}, {}], whiskers [{}, {}], {} outlier(s)",
        summary.count,
        summary.mean,
        summary.median,
        summary.q1,
        summary.q3,
        summary.whisker_low,
        summary.whisker_high,
        summary.outliers.len()
    );
    if let Some(percent) = percent_of_optimal {
        println!("mean at {percent:.4}% of the optimum");
    }
    let artifact = StatsArtifact {
        summary,
        percent_of_optimal,
    };
    write_json_artifact(out, "stats.json", &artifact)
}

/// Accepts either serialized run records (using their selected powers) or a
/// plain JSON array of numbers.
fn extract_powers(value: &serde_json::Value) -> Result<Vec<f64>> {
    if let Ok(records) = serde_json::from_value::<Vec<RunRecord>>(value.clone()) {
        return Ok(selected_powers(&records));
    }
    let Some(array) = value.as_array() else {
        bail!("expected a JSON array of numbers or of run records");
    };
    array
        .iter()
        .map(|v| {
            v.as_f64()
                .context("expected a JSON array of numbers or of run records")
        })
        .collect()
}
