//! Experiment orchestration: seeded multi-run solver farms, solution
//! selection and scoring, degeneracy enumeration, and placement heatmaps.
//!
//! Every run gets its own seed split from the master seed, so farms are
//! reproducible regardless of worker count or execution order. Timing fields
//! are the only nondeterministic part of a record; [`zero_timings`] strips
//! them when byte-identical artifacts are required.

use std::f64::consts::TAU;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, Layout};
use crate::optimize::{
    bo_minimize, cobyla_minimize, exhaustive_max_power, powell_minimize, simulated_annealing,
    BoOptions, LocalOptions, ObjectiveHandle, SaSchedule, ENUMERATION_CAP,
};
use crate::pauli::{qubo_to_hamiltonian, DiagonalHamiltonian};
use crate::qubo::{build_q, InteractionTable, QuboProblem};
use crate::vqe::{
    apply_ansatz, expectation, sample_shots, select_solution_from_counts,
    select_solution_from_state, AnsatzSpec, ExpectationMode, MAX_QUBITS,
};
use crate::wake::Scenario;

/// Solver choice for one experiment.
///
/// The VQE variants differ in the classical optimizer driving the circuit;
/// `vqe-exact` uses COBYLA on the noiseless expectation instead of sampled
/// CVaR and selects from exact state probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    Sa,
    VqeCobyla,
    VqePowell,
    VqeBo,
    VqeExact,
}

impl Method {
    /// All methods, in CLI listing order.
    pub const ALL: [Method; 6] = [
        Method::Exhaustive,
        Method::Sa,
        Method::VqeCobyla,
        Method::VqePowell,
        Method::VqeBo,
        Method::VqeExact,
    ];

    /// Kebab-case name used in CLIs, config files, and records.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Sa => "sa",
            Method::VqeCobyla => "vqe-cobyla",
            Method::VqePowell => "vqe-powell",
            Method::VqeBo => "vqe-bo",
            Method::VqeExact => "vqe-exact",
        }
    }

    /// True for methods that simulate the variational circuit.
    pub fn is_vqe(&self) -> bool {
        matches!(
            self,
            Method::VqeCobyla | Method::VqePowell | Method::VqeBo | Method::VqeExact
        )
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method {s:?}; expected one of exhaustive, sa, vqe-cobyla, \
                     vqe-powell, vqe-bo, vqe-exact"
                ))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_m() -> usize {
    4
}

fn default_lambda1() -> f64 {
    1000.0
}

fn default_alpha() -> f64 {
    1.0
}

fn default_shots() -> usize {
    1024
}

fn default_runs() -> usize {
    36
}

/// Full description of one experiment: problem, solver, and farm size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Wind arrangements, wake constants, and grid side length.
    #[serde(default = "Scenario::benchmark_4x4")]
    pub scenario: Scenario,
    /// Required turbine count.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Turbine-count penalty weight λ₁.
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    /// Proximity limit ξ (0 disables the separation constraint).
    #[serde(default)]
    pub xi: f64,
    pub method: Method,
    /// CVaR tail fraction α in (0, 1].
    #[serde(default = "default_alpha")]
    pub cvar_alpha: f64,
    /// Measurement shots per objective evaluation.
    #[serde(default = "default_shots")]
    pub shots: usize,
    /// Ansatz layers; `None` means one layer per qubit.
    #[serde(default)]
    pub layers: Option<usize>,
    #[serde(default = "default_runs")]
    pub num_runs: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// The 4×4 benchmark problem with default farm settings.
    pub fn benchmark(method: Method) -> Self {
        Self {
            scenario: Scenario::benchmark_4x4(),
            m: default_m(),
            lambda1: default_lambda1(),
            xi: 0.0,
            method,
            cvar_alpha: default_alpha(),
            shots: default_shots(),
            layers: None,
            num_runs: default_runs(),
            master_seed: 0,
        }
    }

    /// Parses and validates a config document.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every field against the solver preconditions.
    pub fn validate(&self) -> Result<()> {
        let geometry = self.scenario.geometry()?;
        self.scenario.regime()?;
        self.scenario.wake.validate()?;
        let q = geometry.num_sites();
        if self.m == 0 || self.m > q {
            return Err(Error::InvalidInput(format!(
                "turbine count m = {} outside 1..={q}",
                self.m
            )));
        }
        if self.lambda1 <= 0.0 || !self.lambda1.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda1 = {} must be positive and finite",
                self.lambda1
            )));
        }
        if self.xi < 0.0 || !self.xi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "xi = {} must be nonnegative and finite",
                self.xi
            )));
        }
        if !(self.cvar_alpha > 0.0 && self.cvar_alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cvar_alpha = {} outside (0, 1]",
                self.cvar_alpha
            )));
        }
        if self.shots == 0 {
            return Err(Error::InvalidInput("shots must be at least 1".into()));
        }
        if self.layers == Some(0) {
            return Err(Error::InvalidInput("layers must be at least 1".into()));
        }
        if self.num_runs == 0 {
            return Err(Error::InvalidInput("num_runs must be at least 1".into()));
        }
        if self.method.is_vqe() && q > MAX_QUBITS {
            return Err(Error::SizeCap {
                what: "qubit count for VQE simulation",
                got: q,
                cap: MAX_QUBITS,
            });
        }
        if matches!(self.method, Method::Exhaustive) && q > ENUMERATION_CAP {
            return Err(Error::SizeCap {
                what: "site count for exhaustive search",
                got: q,
                cap: ENUMERATION_CAP,
            });
        }
        Ok(())
    }
}

/// One recorded objective evaluation inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub value: f64,
    pub elapsed_seconds: f64,
}

/// Outcome of a single seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub method: Method,
    pub alpha: f64,
    /// Selected layout bitstring (site 1 leftmost); `None` when the run
    /// produced no layout with exactly m turbines.
    pub selected_layout: Option<String>,
    /// Farm power of the selected layout in kW.
    pub power_kw: Option<f64>,
    pub objective_history: Vec<HistoryEntry>,
    pub wall_time_seconds: f64,
}

/// Splits one run seed from the master seed (SplitMix64 finalizer over an
/// offset stream position), so runs are uncorrelated and order-independent.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Zeroes wall-clock fields so two equal-seed farms compare byte-identically.
pub fn zero_timings(records: &mut [RunRecord]) {
    for record in records {
        record.wall_time_seconds = 0.0;
        for entry in &mut record.objective_history {
            entry.elapsed_seconds = 0.0;
        }
    }
}

/// Runs `num_runs` independent seeded solves concurrently and returns the
/// records sorted by run index. Per-run failures yield records with no
/// selected layout; they never abort the farm.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let geometry = config.scenario.geometry()?;
    let regime = config.scenario.regime()?;
    let table = InteractionTable::build(&regime, &config.scenario.wake, &geometry);
    let problem = build_q(
        &regime,
        &config.scenario.wake,
        &geometry,
        config.lambda1,
        config.m,
    );
    let hamiltonian = qubo_to_hamiltonian(&problem);
    let mut records: Vec<RunRecord> = (0..config.num_runs)
        .into_par_iter()
        .map(|run_index| run_single(config, run_index, &geometry, &table, &problem, &hamiltonian))
        .collect();
    records.sort_by_key(|r| r.run_index);
    Ok(records)
}

/// Same farm as [`run_experiment`], on a dedicated pool of `workers` threads
/// (`None` uses the global pool). Records are identical either way; only the
/// timing fields depend on scheduling.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<Vec<RunRecord>> {
    match workers {
        None => run_experiment(config),
        Some(0) => Err(Error::InvalidInput("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool setup failed: {e}")))?;
            pool.install(|| run_experiment(config))
        }
    }
}

fn run_single(
    config: &ExperimentConfig,
    run_index: usize,
    geometry: &GridGeometry,
    table: &InteractionTable,
    problem: &QuboProblem,
    hamiltonian: &DiagonalHamiltonian,
) -> RunRecord {
    let seed = split_seed(config.master_seed, run_index as u64);
    let started = Instant::now();
    let (selected, history) = match config.method {
        Method::Exhaustive => {
            let selected = exhaustive_max_power(table, config.m, config.xi, geometry)
                .ok()
                .and_then(|(_, layouts)| layouts.into_iter().next());
            (selected, Vec::new())
        }
        Method::Sa => {
            let schedule = SaSchedule::for_problem(problem);
            let result = simulated_annealing(problem, &schedule, seed);
            let history = result
                .trace
                .iter()
                .map(|&(sweep, value)| HistoryEntry {
                    iteration: sweep,
                    value,
                    elapsed_seconds: 0.0,
                })
                .collect();
            let selected = (result.layout_best.ones() == config.m).then_some(result.layout_best);
            (selected, history)
        }
        _ => run_vqe(config, seed, hamiltonian),
    };
    let power_kw = selected.as_ref().map(|layout| table.objective(layout));
    RunRecord {
        run_index,
        seed,
        method: config.method,
        alpha: config.cvar_alpha,
        selected_layout: selected.map(|l| l.to_bitstring()),
        power_kw,
        objective_history: history,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    }
}

fn run_vqe(
    config: &ExperimentConfig,
    seed: u64,
    hamiltonian: &DiagonalHamiltonian,
) -> (Option<Layout>, Vec<HistoryEntry>) {
    let q = hamiltonian.num_qubits();
    let layers = config.layers.unwrap_or(q);
    let Ok(spec) = AnsatzSpec::new(q, layers) else {
        return (None, Vec::new());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampling_seed: u64 = rng.random();
    let selection_seed: u64 = rng.random();
    let bo_seed: u64 = rng.random();
    let theta0: Vec<f64> = (0..spec.parameter_count())
        .map(|_| rng.random_range(0.0..TAU))
        .collect();
    let mode = if config.method == Method::VqeExact {
        ExpectationMode::Exact
    } else {
        // The sampling seed is fixed for the whole run (common random
        // numbers), so each run optimizes a deterministic objective.
        ExpectationMode::Sampled {
            shots: config.shots,
            alpha: config.cvar_alpha,
            seed: sampling_seed,
        }
    };
    let mut handle = ObjectiveHandle::new(|theta: &[f64]| {
        apply_ansatz(&spec, theta)
            .and_then(|state| expectation(&state, hamiltonian, mode))
            .unwrap_or(f64::NAN)
    });
    let outcome = match config.method {
        Method::VqeCobyla | Method::VqeExact => {
            cobyla_minimize(&mut handle, &theta0, &LocalOptions::default())
        }
        Method::VqePowell => powell_minimize(&mut handle, &theta0, &LocalOptions::default()),
        Method::VqeBo => bo_minimize(
            &mut handle,
            spec.parameter_count(),
            &BoOptions::default(),
            bo_seed,
        ),
        _ => unreachable!("classical methods are handled by the caller"),
    };
    let history = handle
        .history()
        .iter()
        .enumerate()
        .map(|(iteration, point)| HistoryEntry {
            iteration,
            value: point.value,
            elapsed_seconds: point.elapsed_seconds,
        })
        .collect();
    let selected = outcome.ok().and_then(|result| {
        let state = apply_ansatz(&spec, &result.theta_best).ok()?;
        if config.method == Method::VqeExact {
            select_solution_from_state(&state, config.m)
        } else {
            let shots = sample_shots(&state, config.shots, selection_seed).ok()?;
            select_solution_from_counts(&shots, config.m)
        }
    });
    (selected, history)
}

/// Exhaustively enumerates the degenerate optimal set: the best feasible
/// power and every layout attaining it, sorted by ascending label.
pub fn enumerate_degenerate(config: &ExperimentConfig) -> Result<(f64, Vec<Layout>)> {
    config.validate()?;
    let geometry = config.scenario.geometry()?;
    let regime = config.scenario.regime()?;
    let table = InteractionTable::build(&regime, &config.scenario.wake, &geometry);
    let (power, mut layouts) = exhaustive_max_power(&table, config.m, config.xi, &geometry)?;
    layouts.sort_by_key(Layout::to_label);
    Ok((power, layouts))
}

/// Mean turbine placement ⟨X⟩ over a set of layouts, as a grid matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapResult {
    /// Row-major l_grid × l_grid matrix; entry (r, c) is the fraction of
    /// layouts occupying that site.
    pub mean_placement: Vec<Vec<f64>>,
}

impl HeatmapResult {
    /// Sum of all entries; equals m for layouts of uniform turbine count.
    pub fn total(&self) -> f64 {
        self.mean_placement.iter().flatten().sum()
    }
}

/// Averages layouts element-wise into a placement heatmap.
pub fn mean_placement(layouts: &[Layout], geometry: &GridGeometry) -> Result<HeatmapResult> {
    if layouts.is_empty() {
        return Err(Error::InvalidInput(
            "heatmap needs at least one layout".into(),
        ));
    }
    let q = geometry.num_sites();
    if layouts.iter().any(|l| l.len() != q) {
        return Err(Error::InvalidInput(format!(
            "every layout must cover all {q} sites"
        )));
    }
    let l = geometry.l_grid();
    let scale = 1.0 / layouts.len() as f64;
    let mut matrix = vec![vec![0.0; l]; l];
    for layout in layouts {
        for site in layout.iter_ones() {
            matrix[site / l][site % l] += scale;
        }
    }
    Ok(HeatmapResult {
        mean_placement: matrix,
    })
}

/// 100 × mean(power) / optimal over a list of selected powers.
pub fn percent_of_optimal_powers(powers: &[f64], optimal_power: f64) -> Result<f64> {
    if !optimal_power.is_finite() || optimal_power <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "optimal power {optimal_power} must be positive"
        )));
    }
    if powers.is_empty() {
        return Err(Error::NoSuccessfulRuns);
    }
    Ok(100.0 * crate::stats::sample_mean(powers)? / optimal_power)
}

/// 100 × mean(power) / optimal over the runs that selected a layout.
pub fn percent_of_optimal(records: &[RunRecord], optimal_power: f64) -> Result<f64> {
    let powers: Vec<f64> = records.iter().filter_map(|r| r.power_kw).collect();
    percent_of_optimal_powers(&powers, optimal_power)
}

/// Powers of the runs that selected a layout, in record order.
pub fn selected_powers(records: &[RunRecord]) -> Vec<f64> {
    records.iter().filter_map(|r| r.power_kw).collect()
}

/// Flat CSV table of run records (numeric fields, no quoting needed).
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "run_index,seed,method,alpha,selected_layout,power_kw,evaluations,wall_time_seconds\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.run_index,
            r.seed,
            r.method,
            r.alpha,
            r.selected_layout.as_deref().unwrap_or(""),
            r.power_kw.map(|p| p.to_string()).unwrap_or_default(),
            r.objective_history.len(),
            r.wall_time_seconds,
        ));
    }
    out
}

/// Heatmap as l_grid CSV rows.
pub fn heatmap_to_csv(heatmap: &HeatmapResult) -> String {
    let mut out = String::new();
    for row in &heatmap.mean_placement {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
