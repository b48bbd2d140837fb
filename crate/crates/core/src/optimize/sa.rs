//! Simulated annealing over binary layouts.
//!
//! Metropolis single-bit-flip chain on {0,1}^q with a geometric inverse-
//! temperature schedule. The default temperature range is derived from the
//! QUBO coefficient magnitudes so that early sweeps accept almost any move
//! and late sweeps freeze out even the smallest coupling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Layout;
use crate::qubo::QuboProblem;

/// Geometric annealing schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SaSchedule {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    pub moves_per_sweep: usize,
}

impl SaSchedule {
    /// Validated schedule with explicit inverse temperatures.
    pub fn new(
        sweeps: usize,
        beta_initial: f64,
        beta_final: f64,
        moves_per_sweep: usize,
    ) -> Result<Self> {
        if !(beta_initial > 0.0 && beta_final >= beta_initial) {
            return Err(Error::InvalidInput(format!(
                "need beta_final >= beta_initial > 0, got {beta_initial} and {beta_final}"
            )));
        }
        if !(beta_initial.is_finite() && beta_final.is_finite()) {
            return Err(Error::InvalidInput(
                "inverse temperatures must be finite".into(),
            ));
        }
        if moves_per_sweep == 0 {
            return Err(Error::InvalidInput(
                "moves_per_sweep must be positive".into(),
            ));
        }
        Ok(Self {
            sweeps,
            beta_initial,
            beta_final,
            moves_per_sweep,
        })
    }

    /// Default schedule scaled to the problem: 1000 sweeps of q moves with
    /// beta_initial = 0.1/max|Q| and beta_final = 10/min nonzero |Q|.
    pub fn for_problem(problem: &QuboProblem) -> Self {
        Self::for_problem_with_sweeps(problem, 1000)
    }

    /// Problem-scaled schedule with a custom sweep count.
    pub fn for_problem_with_sweeps(problem: &QuboProblem, sweeps: usize) -> Self {
        let max_abs = problem.max_abs_coefficient();
        let beta_initial = if max_abs > 0.0 { 0.1 / max_abs } else { 0.1 };
        let beta_final = match problem.min_nonzero_abs_coefficient() {
            Some(min_abs) => (10.0 / min_abs).max(beta_initial),
            None => 10.0_f64.max(beta_initial),
        };
        Self {
            sweeps,
            beta_initial,
            beta_final,
            moves_per_sweep: problem.num_sites.max(1),
        }
    }

    /// Inverse temperature for a sweep index via geometric interpolation.
    pub fn beta_at(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.beta_initial;
        }
        let fraction = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_initial * (self.beta_final / self.beta_initial).powf(fraction)
    }
}

/// Outcome of one annealing run, including the best-so-far improvement trace.
#[derive(Debug, Clone)]
pub struct SaResult {
    pub layout_best: Layout,
    pub value_best: f64,
    /// (move index, best value) recorded at the start and at each improvement.
    pub trace: Vec<(usize, f64)>,
}

/// Runs a seeded Metropolis chain and returns the best layout ever visited.
///
/// Moves flip one uniformly chosen bit; downhill moves are always accepted,
/// uphill moves with probability exp(−βΔ). Zero sweeps returns the random
/// initial layout untouched.
pub fn simulated_annealing(problem: &QuboProblem, schedule: &SaSchedule, seed: u64) -> SaResult {
    let q = problem.num_sites;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut current = Layout::zeros(q);
    for k in 0..q {
        if rng.random::<bool>() {
            current.flip(k);
        }
    }
    let mut energy = problem.evaluate(&current);
    let mut best = current.clone();
    let mut best_energy = energy;
    let mut trace = vec![(0, best_energy)];

    let mut move_index = 0usize;
    for sweep in 0..schedule.sweeps {
        let beta = schedule.beta_at(sweep);
        for _ in 0..schedule.moves_per_sweep {
            move_index += 1;
            let k = rng.random_range(0..q);
            let delta = problem.flip_delta(&current, k);
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                current.flip(k);
                energy += delta;
                if energy < best_energy {
                    best_energy = energy;
                    best = current.clone();
                    trace.push((move_index, best_energy));
                }
            }
        }
    }

    SaResult {
        layout_best: best,
        value_best: best_energy,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::exhaustive::{exhaustive_min_qubo, SearchMode};
    use crate::qubo::build_q;
    use crate::wake::Scenario;

    fn diagonal_problem(q: usize) -> QuboProblem {
        let mut problem = QuboProblem::new(q, 0.0, 0.0, 0, 0.0);
        for i in 0..q {
            problem.set_coefficient(i, i, -1.0);
        }
        problem
    }

    fn farm_problem(l_grid: usize, m: usize) -> (QuboProblem, crate::grid::GridGeometry) {
        let scenario = Scenario {
            l_grid,
            ..Scenario::benchmark_4x4()
        };
        let geometry = scenario.geometry().unwrap();
        let regime = scenario.regime().unwrap();
        (
            build_q(&regime, &scenario.wake, &geometry, 1000.0, m),
            geometry,
        )
    }

    #[test]
    fn separable_negative_diagonal_fills_every_site() {
        let problem = diagonal_problem(6);
        let schedule = SaSchedule::new(50, 0.1, 10.0, 6).unwrap();
        let result = simulated_annealing(&problem, &schedule, 7);
        assert_eq!(result.layout_best.ones(), 6);
        assert_eq!(result.value_best, -6.0);
    }

    #[test]
    fn zero_sweeps_returns_the_initial_random_layout() {
        let problem = diagonal_problem(5);
        let schedule = SaSchedule::new(0, 0.1, 10.0, 5).unwrap();
        let result = simulated_annealing(&problem, &schedule, 123);
        // Same seed, zero sweeps: the layout is exactly the seeded draw.
        let repeat = simulated_annealing(&problem, &schedule, 123);
        assert_eq!(result.layout_best, repeat.layout_best);
        assert_eq!(result.value_best, problem.evaluate(&result.layout_best));
        assert_eq!(result.trace.len(), 1);
    }

    #[test]
    fn identical_seeds_reproduce_identical_traces() {
        let problem = diagonal_problem(8);
        let schedule = SaSchedule::new(30, 0.05, 5.0, 8).unwrap();
        let a = simulated_annealing(&problem, &schedule, 99);
        let b = simulated_annealing(&problem, &schedule, 99);
        assert_eq!(a.layout_best, b.layout_best);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn trace_is_monotone_non_increasing() {
        let (problem, _) = farm_problem(4, 4);
        let schedule = SaSchedule::for_problem(&problem);
        let result = simulated_annealing(&problem, &schedule, 11);
        for pair in result.trace.windows(2) {
            assert!(pair[1].1 < pair[0].1);
            assert!(pair[1].0 > pair[0].0);
        }
        assert_eq!(result.trace.last().unwrap().1, result.value_best);
    }

    #[test]
    fn matches_exhaustive_optimum_on_small_farm_in_most_runs() {
        let (problem, geometry) = farm_problem(2, 2);
        let (optimum, _) = exhaustive_min_qubo(&problem, SearchMode::All, &geometry).unwrap();
        let schedule = SaSchedule::for_problem(&problem);
        let hits = (0..100)
            .filter(|&seed| {
                let result = simulated_annealing(&problem, &schedule, seed);
                (result.value_best - optimum).abs() <= 1e-9 * (1.0 + optimum.abs())
            })
            .count();
        assert!(hits >= 95, "only {hits}/100 runs reached the optimum");
    }

    #[test]
    fn schedule_interpolates_geometrically() {
        let schedule = SaSchedule::new(3, 0.01, 1.0, 4).unwrap();
        assert!((schedule.beta_at(0) - 0.01).abs() < 1e-15);
        assert!((schedule.beta_at(1) - 0.1).abs() < 1e-12);
        assert!((schedule.beta_at(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn problem_scaled_schedule_uses_coefficient_magnitudes() {
        let (problem, _) = farm_problem(4, 4);
        let schedule = SaSchedule::for_problem(&problem);
        let max_abs = problem.max_abs_coefficient();
        let min_abs = problem.min_nonzero_abs_coefficient().unwrap();
        assert!((schedule.beta_initial - 0.1 / max_abs).abs() < 1e-18);
        assert!((schedule.beta_final - 10.0 / min_abs).abs() < 1e-12);
        assert_eq!(schedule.moves_per_sweep, 16);
        assert_eq!(schedule.sweeps, 1000);
    }

    #[test]
    fn rejects_inverted_temperature_range() {
        assert!(SaSchedule::new(10, 1.0, 0.5, 4).is_err());
        assert!(SaSchedule::new(10, 0.0, 1.0, 4).is_err());
    }
}
