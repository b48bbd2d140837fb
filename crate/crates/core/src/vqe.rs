//! Simulated variational circuit: hardware-efficient ansatz, shot sampling,
//! and CVaR energy estimation over a diagonal Hamiltonian.
//!
//! The ansatz is `num_layers` repetitions of one single-qubit rotation per
//! qubit followed by a linear CNOT chain (qubit k controls k + 1). Each layer
//! uses one rotation axis; the default pattern alternates Y and X so that the
//! reachable states leave the real subspace — with Y rotations alone the state
//! stays real and at most 2^q − 1 parameters can ever act independently. The
//! layer structure is fixed by `AnsatzSpec` and must not change silently.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Layout;
use crate::pauli::DiagonalHamiltonian;

/// Dense statevectors are capped at this many qubits.
pub const MAX_QUBITS: usize = 24;

/// Statevector norms must stay within this distance of 1.
const NORM_TOL: f64 = 1e-12;

/// Rotation axis for one ansatz layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

/// Circuit shape: qubit count, depth, and one rotation axis per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnsatzSpec {
    num_qubits: usize,
    num_layers: usize,
    axes: Vec<RotationAxis>,
}

impl AnsatzSpec {
    /// Ansatz with the default alternating Y/X axis pattern (Y first).
    pub fn new(num_qubits: usize, num_layers: usize) -> Result<Self> {
        let axes = (0..num_layers)
            .map(|l| {
                if l % 2 == 0 {
                    RotationAxis::Y
                } else {
                    RotationAxis::X
                }
            })
            .collect();
        Self::with_axes(num_qubits, num_layers, axes)
    }

    /// Default depth: as many layers as qubits.
    pub fn square(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, num_qubits)
    }

    /// Ansatz with an explicit per-layer axis pattern.
    pub fn with_axes(
        num_qubits: usize,
        num_layers: usize,
        axes: Vec<RotationAxis>,
    ) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidInput(
                "ansatz needs at least one qubit".into(),
            ));
        }
        if num_qubits > MAX_QUBITS {
            return Err(Error::SizeCap {
                what: "num_qubits",
                got: num_qubits,
                cap: MAX_QUBITS,
            });
        }
        if axes.len() != num_layers {
            return Err(Error::InvalidInput(format!(
                "expected {} axes (one per layer), got {}",
                num_layers,
                axes.len()
            )));
        }
        Ok(Self {
            num_qubits,
            num_layers,
            axes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    /// Axis used by each rotation layer.
    pub fn axes(&self) -> &[RotationAxis] {
        &self.axes
    }

    /// One parameter per qubit per layer.
    pub fn parameter_count(&self) -> usize {
        self.num_qubits * self.num_layers
    }
}

/// Rotation angles stored wrapped into [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    /// Wraps each angle modulo 2π; rejects non-finite entries.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "parameter vector has a non-finite entry".into(),
            ));
        }
        Ok(Self {
            values: raw.into_iter().map(wrap_angle).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Wraps an angle into [0, 2π).
fn wrap_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    if wrapped == TAU {
        0.0
    } else {
        wrapped
    }
}

/// Dense complex amplitudes over all 2^q computational basis states.
///
/// Basis label bit order matches grid site labels: site 1 (qubit 0) is the
/// most significant bit of the label.
#[derive(Debug, Clone)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Wraps explicit amplitudes; the length must be 2^q and the norm 1
    /// within 1e-12.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::SizeCap {
                what: "num_qubits",
                got: num_qubits,
                cap: MAX_QUBITS,
            });
        }
        let state = Self {
            num_qubits,
            amplitudes,
        };
        if (state.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "statevector norm {} is not 1 within {NORM_TOL}",
                state.norm()
            )));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Probability of measuring basis state `label`.
    pub fn probability(&self, label: u64) -> f64 {
        self.amplitudes[label as usize].norm_sqr()
    }

    /// All basis probabilities in label order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// 2×2 rotation matrix (row major) about `axis`, or its angle derivative.
fn rotation_matrix(axis: RotationAxis, theta: f64, derivative: bool) -> [Complex64; 4] {
    let half = 0.5 * theta;
    let c = half.cos();
    let s = half.sin();
    let re = Complex64::new;
    match (axis, derivative) {
        (RotationAxis::Y, false) => [re(c, 0.0), re(-s, 0.0), re(s, 0.0), re(c, 0.0)],
        (RotationAxis::Y, true) => [
            re(-0.5 * s, 0.0),
            re(-0.5 * c, 0.0),
            re(0.5 * c, 0.0),
            re(-0.5 * s, 0.0),
        ],
        (RotationAxis::X, false) => [re(c, 0.0), re(0.0, -s), re(0.0, -s), re(c, 0.0)],
        (RotationAxis::X, true) => [
            re(-0.5 * s, 0.0),
            re(0.0, -0.5 * c),
            re(0.0, -0.5 * c),
            re(-0.5 * s, 0.0),
        ],
        (RotationAxis::Z, false) => [re(c, -s), re(0.0, 0.0), re(0.0, 0.0), re(c, s)],
        (RotationAxis::Z, true) => [
            re(-0.5 * s, -0.5 * c),
            re(0.0, 0.0),
            re(0.0, 0.0),
            re(-0.5 * s, 0.5 * c),
        ],
    }
}

/// Applies a single-qubit matrix to `qubit` in place.
fn apply_single_qubit(
    amplitudes: &mut [Complex64],
    num_qubits: usize,
    qubit: usize,
    m: [Complex64; 4],
) {
    let mask = 1usize << (num_qubits - 1 - qubit);
    for base in 0..amplitudes.len() {
        if base & mask == 0 {
            let a0 = amplitudes[base];
            let a1 = amplitudes[base | mask];
            amplitudes[base] = m[0] * a0 + m[1] * a1;
            amplitudes[base | mask] = m[2] * a0 + m[3] * a1;
        }
    }
}

/// Applies CNOT with `control` acting on `target` in place.
fn apply_cnot(amplitudes: &mut [Complex64], num_qubits: usize, control: usize, target: usize) {
    let cmask = 1usize << (num_qubits - 1 - control);
    let tmask = 1usize << (num_qubits - 1 - target);
    for base in 0..amplitudes.len() {
        if base & cmask != 0 && base & tmask == 0 {
            amplitudes.swap(base, base | tmask);
        }
    }
}

/// Runs the circuit from |0…0⟩; with `derivative_of = Some(k)` the k-th
/// rotation is replaced by its angle derivative (the result then has norm
/// 1/2, not 1).
pub(crate) fn run_circuit(
    spec: &AnsatzSpec,
    theta: &[f64],
    derivative_of: Option<usize>,
) -> Result<Vec<Complex64>> {
    if theta.len() != spec.parameter_count() {
        return Err(Error::InvalidInput(format!(
            "expected {} parameters, got {}",
            spec.parameter_count(),
            theta.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "parameter vector has a non-finite entry".into(),
        ));
    }
    let q = spec.num_qubits;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << q];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    for layer in 0..spec.num_layers {
        let axis = spec.axes[layer];
        for qubit in 0..q {
            let index = layer * q + qubit;
            let matrix =
                rotation_matrix(axis, wrap_angle(theta[index]), derivative_of == Some(index));
            apply_single_qubit(&mut amplitudes, q, qubit, matrix);
        }
        for control in 0..q.saturating_sub(1) {
            apply_cnot(&mut amplitudes, q, control, control + 1);
        }
    }
    Ok(amplitudes)
}

/// Prepares the ansatz state for `theta` (angles wrapped modulo 2π).
pub fn apply_ansatz(spec: &AnsatzSpec, theta: &[f64]) -> Result<Statevector> {
    let amplitudes = run_circuit(spec, theta, None)?;
    let state = Statevector {
        num_qubits: spec.num_qubits,
        amplitudes,
    };
    debug_assert!((state.norm() - 1.0).abs() <= NORM_TOL);
    Ok(state)
}

/// Measurement outcome histogram from a fixed number of shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotResult {
    pub num_qubits: usize,
    pub counts: BTreeMap<u64, usize>,
    pub shots: usize,
}

/// Draws `shots` basis-state samples from the state's probabilities.
///
/// Deterministic for a fixed state and seed.
pub fn sample_shots(state: &Statevector, shots: usize, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidInput("shot count must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(state.amplitudes.len());
    let mut cumulative = 0.0;
    for amplitude in &state.amplitudes {
        cumulative += amplitude.norm_sqr();
        cdf.push(cumulative);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let last = cdf.len() - 1;
    for _ in 0..shots {
        let r: f64 = rng.random();
        let label = cdf.partition_point(|&c| c <= r).min(last) as u64;
        *counts.entry(label).or_insert(0) += 1;
    }
    Ok(ShotResult {
        num_qubits: state.num_qubits,
        counts,
        shots,
    })
}

/// Mean of the lowest ⌈α·n⌉ values of the multiset.
///
/// With α = 1 this is exactly the arithmetic mean (same summation order as
/// the input, no sorting).
pub fn cvar_estimate(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("CVaR of an empty sample".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha {alpha} is outside (0, 1]"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "CVaR sample has a non-finite value".into(),
        ));
    }
    let n = values.len();
    let keep = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    if keep == n {
        return Ok(values.iter().sum::<f64>() / n as f64);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    Ok(sorted[..keep].iter().sum::<f64>() / keep as f64)
}

/// How to turn a state plus Hamiltonian into a scalar objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectationMode {
    /// Full expectation Σ p(x) E(x).
    Exact,
    /// CVaR over the exact distribution: mean energy of the lowest-energy
    /// probability mass of size α, splitting the boundary state fractionally.
    ExactCvar { alpha: f64 },
    /// CVaR over a finite sample of measurement shots.
    Sampled { shots: usize, alpha: f64, seed: u64 },
}

/// Energy objective of `state` under `hamiltonian` in the chosen mode.
pub fn expectation(
    state: &Statevector,
    hamiltonian: &DiagonalHamiltonian,
    mode: ExpectationMode,
) -> Result<f64> {
    if hamiltonian.num_qubits() != state.num_qubits {
        return Err(Error::InvalidInput(format!(
            "hamiltonian acts on {} qubits but the state has {}",
            hamiltonian.num_qubits(),
            state.num_qubits
        )));
    }
    match mode {
        ExpectationMode::Exact => {
            let mut total = 0.0;
            for (label, amplitude) in state.amplitudes.iter().enumerate() {
                let p = amplitude.norm_sqr();
                if p > 0.0 {
                    total += p * hamiltonian.basis_energy(label as u64);
                }
            }
            Ok(total)
        }
        ExpectationMode::ExactCvar { alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "alpha {alpha} is outside (0, 1]"
                )));
            }
            let mut weighted: Vec<(f64, f64)> = state
                .amplitudes
                .iter()
                .enumerate()
                .filter_map(|(label, amplitude)| {
                    let p = amplitude.norm_sqr();
                    (p > 0.0).then(|| (hamiltonian.basis_energy(label as u64), p))
                })
                .collect();
            weighted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite energies compare"));
            let mut remaining = alpha;
            let mut total = 0.0;
            for (energy, p) in weighted {
                let take = p.min(remaining);
                total += take * energy;
                remaining -= take;
                if remaining <= 0.0 {
                    break;
                }
            }
            Ok(total / alpha)
        }
        ExpectationMode::Sampled { shots, alpha, seed } => {
            let result = sample_shots(state, shots, seed)?;
            let mut energies = Vec::with_capacity(shots);
            for (&label, &count) in &result.counts {
                let energy = hamiltonian.basis_energy(label);
                energies.extend((0..count).map(|_| energy));
            }
            cvar_estimate(&energies, alpha)
        }
    }
}

/// Most frequent measured bitstring with exactly `m` ones; ties go to the
/// lowest label. `None` when no weight-m outcome was observed.
pub fn select_solution_from_counts(result: &ShotResult, m: usize) -> Option<Layout> {
    let mut best: Option<(usize, u64)> = None;
    for (&label, &count) in &result.counts {
        if label.count_ones() as usize != m {
            continue;
        }
        let better = match best {
            None => true,
            Some((best_count, best_label)) => {
                count > best_count || (count == best_count && label < best_label)
            }
        };
        if better {
            best = Some((count, label));
        }
    }
    best.map(|(_, label)| {
        Layout::from_label(label, result.num_qubits).expect("label fits the qubit count")
    })
}

/// Highest-probability weight-m basis state of an exact distribution; ties go
/// to the lowest label. `None` when every weight-m state has zero probability.
pub fn select_solution_from_state(state: &Statevector, m: usize) -> Option<Layout> {
    let mut best: Option<(f64, u64)> = None;
    for label in 0..(1u64 << state.num_qubits) {
        if label.count_ones() as usize != m {
            continue;
        }
        let p = state.probability(label);
        if best.is_none_or(|(best_p, _)| p > best_p) {
            best = Some((p, label));
        }
    }
    match best {
        Some((p, label)) if p > 0.0 => {
            Some(Layout::from_label(label, state.num_qubits).expect("label fits the qubit count"))
        }
        _ => None,
    }
}
