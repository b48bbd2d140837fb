//! QUBO → diagonal Ising Hamiltonian via the x = (1 − z)/2 substitution.
//!
//! Every term is a product of Pauli-Z operators encoded as a bit mask, so a
//! basis state's energy is a sum of ±coefficient parities — no matrices.

use std::collections::BTreeMap;

use crate::qubo::QuboProblem;

/// Coefficients smaller than this are dropped after combining terms.
const PRUNE_EPS: f64 = 1e-15;

/// One diagonal Pauli term: `coefficient · ∏_{i ∈ mask} Z_i`.
///
/// Bit `num_qubits − 1 − k` of `z_mask` marks qubit `k`, matching the basis
/// label convention where site 1 is the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub z_mask: u64,
}

/// A Hamiltonian that is diagonal in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl DiagonalHamiltonian {
    /// Builds from explicit terms (terms with equal masks are combined,
    /// negligible coefficients pruned; terms sorted by mask).
    pub fn new(num_qubits: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Self {
        let mut combined: BTreeMap<u64, f64> = BTreeMap::new();
        for term in terms {
            *combined.entry(term.z_mask).or_insert(0.0) += term.coefficient;
        }
        let terms = combined
            .into_iter()
            .filter(|(_, c)| c.abs() >= PRUNE_EPS)
            .map(|(z_mask, coefficient)| PauliTerm {
                coefficient,
                z_mask,
            })
            .collect();
        Self { num_qubits, terms }
    }

    /// Number of qubits the masks refer to.
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Terms sorted by mask; the identity (mask 0) comes first when present.
    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Energy of computational basis state `label`:
    /// Σ coefficient · (−1)^popcount(label & mask).
    pub fn basis_energy(&self, label: u64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let parity = (label & term.z_mask).count_ones() & 1;
                if parity == 0 {
                    term.coefficient
                } else {
                    -term.coefficient
                }
            })
            .sum()
    }

    /// Minimum basis energy over all 2^q labels (exhaustive; small q only).
    pub fn min_basis_energy(&self) -> f64 {
        (0..(1u64 << self.num_qubits))
            .map(|label| self.basis_energy(label))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Maps x^T Q x to a diagonal Hamiltonian with identical basis energies:
/// `basis_energy(label)` equals `evaluate` on the corresponding layout.
pub fn qubo_to_hamiltonian(problem: &QuboProblem) -> DiagonalHamiltonian {
    let q = problem.num_sites;
    let bit = |site: usize| 1u64 << (q - 1 - site);
    let mut terms = Vec::new();
    for i in 0..q {
        let diag = problem.coefficient(i, i);
        // x_i = (1 − z_i)/2.
        terms.push(PauliTerm {
            coefficient: diag / 2.0,
            z_mask: 0,
        });
        terms.push(PauliTerm {
            coefficient: -diag / 2.0,
            z_mask: bit(i),
        });
        for j in (i + 1)..q {
            let coupling = problem.coefficient(i, j);
            if coupling == 0.0 {
                continue;
            }
            // x_i x_j = (1 − z_i − z_j + z_i z_j)/4.
            terms.push(PauliTerm {
                coefficient: coupling / 4.0,
                z_mask: 0,
            });
            terms.push(PauliTerm {
                coefficient: -coupling / 4.0,
                z_mask: bit(i),
            });
            terms.push(PauliTerm {
                coefficient: -coupling / 4.0,
                z_mask: bit(j),
            });
            terms.push(PauliTerm {
                coefficient: coupling / 4.0,
                z_mask: bit(i) | bit(j),
            });
        }
    }
    DiagonalHamiltonian::new(q, terms)
}
