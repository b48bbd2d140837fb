//! Derivative-free optimizers and exact baselines.
//!
//! Continuous minimizers (trust-region, conjugate-direction, Bayesian) share
//! the [`ObjectiveHandle`] evaluation recorder; binary problems go through
//! simulated annealing or the exhaustive oracles.

mod bo;
mod cobyla;
mod exhaustive;
mod powell;
mod sa;

pub use bo::{
    bo_minimize, expected_improvement, BoOptions, GpModel, KernelForm, KernelHyperparameters,
};
pub use cobyla::cobyla_minimize;
pub use exhaustive::{
    exhaustive_max_power, exhaustive_min_qubo, fixed_weight_labels, SearchMode, ENUMERATION_CAP,
};
pub use powell::powell_minimize;
pub use sa::{simulated_annealing, SaResult, SaSchedule};

use std::time::Instant;

use crate::error::{Error, Result};

/// One recorded objective evaluation.
#[derive(Clone, Debug)]
pub struct HistoryPoint {
    pub theta: Vec<f64>,
    pub value: f64,
    pub elapsed_seconds: f64,
}

/// Boxed objective: maps a parameter vector to an energy value.
type BoxedObjective<'a> = Box<dyn FnMut(&[f64]) -> f64 + 'a>;

/// Wraps an objective function and records every evaluation exactly once.
pub struct ObjectiveHandle<'a> {
    function: BoxedObjective<'a>,
    history: Vec<HistoryPoint>,
    started: Instant,
}

impl<'a> ObjectiveHandle<'a> {
    /// Wraps `function`; the evaluation clock starts now.
    pub fn new(function: impl FnMut(&[f64]) -> f64 + 'a) -> Self {
        Self {
            function: Box::new(function),
            history: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Evaluates and records (θ, value, elapsed wall time).
    pub fn evaluate(&mut self, theta: &[f64]) -> f64 {
        let value = (self.function)(theta);
        self.history.push(HistoryPoint {
            theta: theta.to_vec(),
            value,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        });
        value
    }

    /// Number of evaluations so far.
    pub fn evaluation_count(&self) -> usize {
        self.history.len()
    }

    /// All recorded evaluations in order.
    pub fn history(&self) -> &[HistoryPoint] {
        &self.history
    }

    /// Consumes the handle, returning the evaluation log.
    pub fn into_history(self) -> Vec<HistoryPoint> {
        self.history
    }

    /// Best (lowest-value) recorded evaluation, earliest on ties.
    pub fn best(&self) -> Option<&HistoryPoint> {
        self.history
            .iter()
            .reduce(|best, p| if p.value < best.value { p } else { best })
    }
}

/// Result of a continuous minimization.
#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub theta_best: Vec<f64>,
    pub value_best: f64,
    pub evaluations: usize,
}

/// Trust-region style stopping parameters shared by the local optimizers.
#[derive(Clone, Copy, Debug)]
pub struct LocalOptions {
    /// Initial step / trust radius (radians for circuit parameters).
    pub rho_begin: f64,
    /// Final resolution: the optimizer stops once the radius shrinks past it.
    pub rho_end: f64,
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            rho_begin: 0.5,
            rho_end: 1e-4,
            max_evals: 1000,
        }
    }
}

impl LocalOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rho_begin.is_finite() && self.rho_end.is_finite())
            || self.rho_begin <= 0.0
            || self.rho_end <= 0.0
            || self.rho_end > self.rho_begin
        {
            return Err(Error::InvalidInput(
                "require 0 < rho_end <= rho_begin, both finite".into(),
            ));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidInput("max_evals must be positive".into()));
        }
        Ok(())
    }
}

/// Shared guard: reject NaN/infinite objective values with a diagnostic.
fn check_finite(value: f64, theta: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteObjective { at: theta.to_vec() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handle_records_every_evaluation_in_order() {
        let mut calls = 0usize;
        let mut handle = ObjectiveHandle::new(|theta: &[f64]| {
            calls += 1;
            theta.iter().sum()
        });
        assert_eq!(handle.evaluate(&[1.0, 2.0]), 3.0);
        assert_eq!(handle.evaluate(&[0.5, 0.0]), 0.5);
        assert_eq!(handle.evaluation_count(), 2);
        assert_eq!(handle.history()[0].theta, vec![1.0, 2.0]);
        assert_eq!(handle.best().unwrap().value, 0.5);
        drop(handle);
        assert_eq!(calls, 2);
    }

    #[test]
    fn options_validation_rejects_degenerate_radii() {
        let bad = LocalOptions {
            rho_begin: 1e-5,
            rho_end: 1e-4,
            max_evals: 10,
        };
        assert!(bad.validate().is_err());
        assert!(LocalOptions::default().validate().is_ok());
    }
}
