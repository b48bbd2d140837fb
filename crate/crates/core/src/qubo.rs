//! Constrained QUBO construction for turbine placement.
//!
//! The farm objective f(x) (power, maximized) and the penalty g(x) (count and
//! proximity constraints) combine into minimize −f + g, expressed as an
//! upper-triangular weight matrix Q with a tracked constant offset so that
//! x^T Q x + λ₁m² = −f(x) + g(x) for every binary x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, Layout};
use crate::wake::{in_wake, reduced_speed, WakeParams, WindRegime};

/// Regime-aggregated pairwise wake deficits and per-site base power.
///
/// `deficit(i, j)` is Σ_d p_d (v_d³ − u_ij³)/3 over the directions where site
/// j+1 lies in the wake of a turbine at site i+1 — the power lost whenever
/// both sites are occupied, attributed to the ordered pair.
#[derive(Clone, Debug)]
pub struct InteractionTable {
    num_sites: usize,
    base_power: f64,
    deficits: Vec<f64>,
}

impl InteractionTable {
    /// Aggregates wake interactions over all direction pairs once, so that
    /// repeated layout evaluations cost O(turbines²).
    pub fn build(regime: &WindRegime, params: &WakeParams, geometry: &GridGeometry) -> Self {
        let q = geometry.num_sites();
        let base_power: f64 = regime
            .arrangements()
            .iter()
            .map(|d| d.probability * d.speed.powi(3) / 3.0)
            .sum();
        let mut deficits = vec![0.0; q * q];
        for i in 0..q {
            for j in 0..q {
                if i == j {
                    continue;
                }
                let delta = geometry
                    .site_distance(i + 1, j + 1)
                    .expect("indices in range");
                let mut sum = 0.0;
                for d in regime.arrangements() {
                    if in_wake(i + 1, j + 1, d, params, geometry) {
                        let v3 = d.speed.powi(3);
                        let u = reduced_speed(params, d.speed, delta);
                        sum += d.probability * (v3 - u.powi(3)) / 3.0;
                    }
                }
                deficits[i * q + j] = sum;
            }
        }
        Self {
            num_sites: q,
            base_power,
            deficits,
        }
    }

    /// Number of sites q.
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Power of one unwaked turbine: (1/3) Σ_d p_d v_d³.
    pub fn base_power(&self) -> f64 {
        self.base_power
    }

    /// Aggregated deficit for the ordered site pair (i, j), 0-based.
    pub fn deficit(&self, i: usize, j: usize) -> f64 {
        self.deficits[i * self.num_sites + j]
    }

    /// Farm power of a layout: Σ_i base·x_i − Σ_{i≠j} deficit(i,j)·x_i·x_j.
    pub fn objective(&self, layout: &Layout) -> f64 {
        assert_eq!(layout.len(), self.num_sites, "layout length mismatch");
        let on: Vec<usize> = layout.iter_ones().collect();
        let mut total = self.base_power * on.len() as f64;
        for &i in &on {
            for &j in &on {
                if i != j {
                    total -= self.deficit(i, j);
                }
            }
        }
        total
    }
}

/// Farm power objective f(x), grouped per site pair.
///
/// Agrees with [`power_ls`] exactly: it is the same double sum with the wake
/// deficits aggregated per ordered pair up front.
pub fn objective_f(
    layout: &Layout,
    regime: &WindRegime,
    params: &WakeParams,
    geometry: &GridGeometry,
) -> f64 {
    InteractionTable::build(regime, params, geometry).objective(layout)
}

/// Constraint penalty g(x) = λ₁(Σx − m)² + λ₂ Σ_{‖i−j‖₂ < ξ} x_i x_j, with the
/// proximity sum over unordered occupied pairs.
pub fn penalty_g(
    layout: &Layout,
    lambda1: f64,
    lambda2: f64,
    m: usize,
    xi: f64,
    geometry: &GridGeometry,
) -> f64 {
    assert!(
        lambda1 >= 0.0 && lambda2 >= 0.0,
        "penalty weights must be nonnegative"
    );
    assert_eq!(layout.len(), geometry.num_sites(), "layout length mismatch");
    let count_gap = layout.ones() as f64 - m as f64;
    let mut penalty = lambda1 * count_gap * count_gap;
    if lambda2 > 0.0 && xi > 0.0 {
        let on: Vec<usize> = layout.iter_ones().collect();
        for (a, &i) in on.iter().enumerate() {
            for &j in &on[a + 1..] {
                if geometry.site_distance(i + 1, j + 1).expect("in range") < xi {
                    penalty += lambda2;
                }
            }
        }
    }
    penalty
}

/// Upper-triangular QUBO weight matrix with penalty metadata.
///
/// Coefficients are stored single-counted: the quadratic form is
/// Σ_{i≤j} Q[i][j] x_i x_j. `constant_offset` carries the λ₁m² constant so
/// the full objective −f + g is recoverable exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuboProblem {
    pub num_sites: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub m: usize,
    pub xi: f64,
    pub constant_offset: f64,
    coefficients: Vec<f64>,
}

impl QuboProblem {
    /// All-zero matrix with the given metadata.
    pub fn new(num_sites: usize, lambda1: f64, lambda2: f64, m: usize, xi: f64) -> Self {
        Self {
            num_sites,
            lambda1,
            lambda2,
            m,
            xi,
            constant_offset: lambda1 * (m as f64) * (m as f64),
            coefficients: vec![0.0; num_sites * (num_sites + 1) / 2],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.num_sites);
        i * self.num_sites - i * (i + 1) / 2 + j
    }

    /// Coefficient for the unordered pair {i, j}, 0-based indices.
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.coefficients[self.slot(lo, hi)]
    }

    /// Sets the coefficient for the unordered pair {i, j}.
    pub fn set_coefficient(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let slot = self.slot(lo, hi);
        self.coefficients[slot] = value;
    }

    /// Quadratic form Σ_{i≤j} Q[i][j] x_i x_j (offset not included).
    pub fn evaluate(&self, layout: &Layout) -> f64 {
        assert_eq!(layout.len(), self.num_sites, "layout length mismatch");
        let on: Vec<usize> = layout.iter_ones().collect();
        let mut total = 0.0;
        for (a, &i) in on.iter().enumerate() {
            total += self.coefficient(i, i);
            for &j in &on[a + 1..] {
                total += self.coefficient(i, j);
            }
        }
        total
    }

    /// Energy change from flipping the bit at 0-based index `k`.
    ///
    /// Matches `evaluate(flipped) − evaluate(layout)` exactly; used by the
    /// annealer to avoid full re-evaluation.
    pub fn flip_delta(&self, layout: &Layout, k: usize) -> f64 {
        let mut interaction = self.coefficient(k, k);
        for j in layout.iter_ones() {
            if j != k {
                interaction += self.coefficient(k, j);
            }
        }
        if layout.is_set(k) {
            -interaction
        } else {
            interaction
        }
    }

    /// Largest |Q[i][j]| over stored entries.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients
            .iter()
            .fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Smallest nonzero |Q[i][j]|, if any entry is nonzero.
    pub fn min_nonzero_abs_coefficient(&self) -> Option<f64> {
        self.coefficients
            .iter()
            .filter(|c| **c != 0.0)
            .map(|c| c.abs())
            .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.min(c))))
    }

    /// Number of nonzero stored coefficients.
    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }

    /// Parses and validates a serialized problem.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let problem: QuboProblem = serde_json::from_str(s)?;
        let expected = problem.num_sites * (problem.num_sites + 1) / 2;
        if problem.coefficients.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} packed coefficients for q = {}, found {}",
                problem.num_sites,
                problem.coefficients.len()
            )));
        }
        if problem.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(problem)
    }

    /// Serializes the problem.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds the wind-farm QUBO for the turbine-count constraint (ξ = 0).
///
/// Diagonal: −(1/3)Σ_d p_d v_d³ + λ₁(1 − 2m). Off-diagonal {i, j}: both
/// ordered wake deficits plus 2λ₁, entering positively so that minimizing
/// x^T Q x penalizes wake interactions and rewards full power.
pub fn build_q(
    regime: &WindRegime,
    params: &WakeParams,
    geometry: &GridGeometry,
    lambda1: f64,
    m: usize,
) -> QuboProblem {
    let table = InteractionTable::build(regime, params, geometry);
    let q = geometry.num_sites();
    let mut problem = QuboProblem::new(q, lambda1, 0.0, m, 0.0);
    let diagonal = -table.base_power() + lambda1 * (1.0 - 2.0 * m as f64);
    for i in 0..q {
        problem.set_coefficient(i, i, diagonal);
        for j in (i + 1)..q {
            let coupling = table.deficit(i, j) + table.deficit(j, i) + 2.0 * lambda1;
            problem.set_coefficient(i, j, coupling);
        }
    }
    problem
}

/// Evaluates the quadratic form on a layout (constant offset excluded).
pub fn evaluate_qubo(problem: &QuboProblem, layout: &Layout) -> f64 {
    problem.evaluate(layout)
}

/// True when the layout places exactly `m` turbines and, for ξ > 0, no two
/// occupied sites lie closer than ξ.
pub fn is_feasible(layout: &Layout, m: usize, xi: f64, geometry: &GridGeometry) -> bool {
    if layout.ones() != m {
        return false;
    }
    if xi > 0.0 {
        let on: Vec<usize> = layout.iter_ones().collect();
        for (a, &i) in on.iter().enumerate() {
            for &j in &on[a + 1..] {
                if geometry.site_distance(i + 1, j + 1).expect("in range") < xi {
                    return false;
                }
            }
        }
    }
    true
}
