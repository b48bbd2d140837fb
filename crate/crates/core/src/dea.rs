//! Dimensional expressivity analysis: detects redundant ansatz parameters
//! from the rank structure of the real state-space Jacobian.
//!
//! Parameter k is kept when adding its tangent direction enlarges the span of
//! the previous ones, judged through the leading principal blocks of the Gram
//! matrix S = Jᵀ J.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vqe::{run_circuit, AnsatzSpec};

/// Relative eigenvalue cutoff: parameter k is independent when the smallest
/// eigenvalue of S_k exceeds this multiple of the largest.
pub const DEA_TOLERANCE: f64 = 1e-10;

/// Real Jacobian of the circuit state: 2^(q+1) rows (real parts of all
/// amplitudes, then imaginary parts) by one column per parameter.
///
/// Every column has Euclidean norm 1/2 because each derivative inserts a
/// Pauli generator with factor 1/2 into a unitary circuit.
pub fn dea_jacobian(spec: &AnsatzSpec, theta: &[f64]) -> Result<DMatrix<f64>> {
    if theta.len() != spec.parameter_count() {
        return Err(Error::InvalidInput(format!(
            "expected {} parameters, got {}",
            spec.parameter_count(),
            theta.len()
        )));
    }
    let dim = 1usize << spec.num_qubits();
    let mut jacobian = DMatrix::zeros(2 * dim, spec.parameter_count());
    for k in 0..spec.parameter_count() {
        let derivative = run_circuit(spec, theta, Some(k))?;
        for (row, amplitude) in derivative.iter().enumerate() {
            jacobian[(row, k)] = amplitude.re;
            jacobian[(dim + row, k)] = amplitude.im;
        }
    }
    Ok(jacobian)
}

/// Per-parameter independence verdicts at the given point.
///
/// Verdict k (0-based) is `true` when S_k, the leading (k+1)×(k+1) block of
/// Jᵀ J, has smallest eigenvalue above `DEA_TOLERANCE` times its largest —
/// i.e. parameters 0..=k act in linearly independent state directions.
pub fn dea_check(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<bool>> {
    let jacobian = dea_jacobian(spec, theta)?;
    let gram = jacobian.transpose() * &jacobian;
    let mut verdicts = Vec::with_capacity(spec.parameter_count());
    for k in 1..=spec.parameter_count() {
        let block = gram.view((0, 0), (k, k)).into_owned();
        let eigenvalues = block.symmetric_eigen().eigenvalues;
        let smallest = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let largest = eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        verdicts.push(largest > 0.0 && smallest > DEA_TOLERANCE * largest);
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqe::{apply_ansatz, RotationAxis};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_theta(n: usize, seed: u64) -> Vec<f64> {
        // Interior of [0, 2π) so finite differences never cross the wrap.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.1..6.1)).collect()
    }

    #[test]
    fn zero_layer_circuit_has_an_empty_jacobian() {
        let spec = AnsatzSpec::new(2, 0).unwrap();
        let jacobian = dea_jacobian(&spec, &[]).unwrap();
        assert_eq!(jacobian.nrows(), 8);
        assert_eq!(jacobian.ncols(), 0);
        assert!(dea_check(&spec, &[]).unwrap().is_empty());
    }

    #[test]
    fn single_rotation_column_norm_is_one_half() {
        let spec = AnsatzSpec::new(1, 1).unwrap();
        let jacobian = dea_jacobian(&spec, &[1.3]).unwrap();
        assert_eq!(jacobian.nrows(), 4);
        assert_eq!(jacobian.ncols(), 1);
        assert!((jacobian.column(0).norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn every_column_norm_is_one_half() {
        let spec = AnsatzSpec::square(3).unwrap();
        let theta = random_theta(spec.parameter_count(), 5);
        let jacobian = dea_jacobian(&spec, &theta).unwrap();
        for k in 0..jacobian.ncols() {
            assert!(
                (jacobian.column(k).norm() - 0.5).abs() < 1e-12,
                "column {k} norm {}",
                jacobian.column(k).norm()
            );
        }
    }

    #[test]
    fn jacobian_matches_central_finite_differences() {
        // All three axes in play.
        let spec = AnsatzSpec::with_axes(
            2,
            3,
            vec![RotationAxis::Y, RotationAxis::X, RotationAxis::Z],
        )
        .unwrap();
        let theta = random_theta(spec.parameter_count(), 11);
        let jacobian = dea_jacobian(&spec, &theta).unwrap();
        let dim = 1usize << spec.num_qubits();
        let step = 1e-5;
        for k in 0..spec.parameter_count() {
            let mut plus = theta.clone();
            plus[k] += step;
            let mut minus = theta.clone();
            minus[k] -= step;
            let state_plus = apply_ansatz(&spec, &plus).unwrap();
            let state_minus = apply_ansatz(&spec, &minus).unwrap();
            for row in 0..dim {
                let diff =
                    (state_plus.amplitudes()[row] - state_minus.amplitudes()[row]) / (2.0 * step);
                assert!(
                    (jacobian[(row, k)] - diff.re).abs() < 1e-6,
                    "Re mismatch at row {row}, column {k}"
                );
                assert!(
                    (jacobian[(dim + row, k)] - diff.im).abs() < 1e-6,
                    "Im mismatch at row {row}, column {k}"
                );
            }
        }
    }

    #[test]
    fn default_ansatz_parameters_are_all_independent() {
        for (q, seed) in [(2usize, 21u64), (3, 22)] {
            let spec = AnsatzSpec::square(q).unwrap();
            let theta = random_theta(spec.parameter_count(), seed);
            let verdicts = dea_check(&spec, &theta).unwrap();
            assert_eq!(verdicts.len(), q * q);
            assert!(
                verdicts.iter().all(|&v| v),
                "q={q}: expected all independent, got {verdicts:?}"
            );
        }
    }

    #[test]
    fn consecutive_same_axis_rotations_are_redundant() {
        // Two Y rotations on one qubit compose into a single rotation, so the
        // second parameter adds no new direction.
        let spec = AnsatzSpec::with_axes(1, 2, vec![RotationAxis::Y, RotationAxis::Y]).unwrap();
        let verdicts = dea_check(&spec, &[0.9, 2.1]).unwrap();
        assert_eq!(verdicts, vec![true, false]);
    }

    #[test]
    fn pure_y_circuit_hits_the_real_rank_ceiling() {
        // A Y-only circuit keeps the state real, so at most 2^q − 1 = 3
        // parameters can be independent; the fourth must be flagged.
        let spec = AnsatzSpec::with_axes(2, 2, vec![RotationAxis::Y, RotationAxis::Y]).unwrap();
        let theta = random_theta(4, 33);
        let verdicts = dea_check(&spec, &theta).unwrap();
        assert!(!verdicts[3], "verdicts {verdicts:?}");
    }

    #[test]
    fn wrong_parameter_count_is_rejected() {
        let spec = AnsatzSpec::new(2, 2).unwrap();
        assert!(dea_jacobian(&spec, &[0.1]).is_err());
    }
}
