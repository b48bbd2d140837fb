//! Wind-farm layout optimization on a square grid.
//!
//! Models turbine wakes with the Jensen formula, casts layout selection as a
//! QUBO, and solves it with a simulated CVaR-VQE pipeline alongside classical
//! baselines (simulated annealing and exact enumeration), plus the experiment
//! harness behind the `wflo` command-line tool.

pub mod dea;
pub mod error;
pub mod grid;
pub mod harness;
pub mod jsonio;
pub mod optimize;
pub mod pauli;
pub mod qubo;
pub mod scaling;
pub mod stats;
pub mod vqe;
pub mod wake;

pub use error::{Error, Result};
pub use grid::{GridGeometry, Layout};
