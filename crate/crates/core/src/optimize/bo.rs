//! Gaussian-process Bayesian optimization with a periodic kernel.
//!
//! Two kernel variants are provided. [`KernelForm::AsPrinted`] squares the
//! scaled coordinate difference inside the sine,
//! k(θ¹,θ²) = σ² ∏_i exp[(−2/l²)·sin²(π((θ¹_i−θ²_i)/p)²)]; that function is
//! not positive semidefinite (three points suffice for a negative
//! eigenvalue, see the tests), so fitting with it aborts once jitter
//! escalation gives up. The default is therefore [`KernelForm::Standard`],
//! the textbook periodic kernel sin²(π|Δ|/p), which is provably PSD.
//! Acquisition is closed-form Expected Improvement, maximized by
//! multi-start trust-region descent.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cobyla::cobyla_minimize;
use super::{check_finite, LocalOptions, ObjectiveHandle, OptimizeResult};
use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const NOISE_FLOOR: f64 = 1e-10;

/// Which periodic kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    /// sin²(π(Δ/p)²) — the squared scaled difference inside the sine.
    /// Not positive semidefinite; kept for faithful evaluation only.
    AsPrinted,
    /// sin²(π|Δ|/p) — the textbook periodic kernel (always PSD).
    Standard,
}

/// Periodic-kernel hyperparameters (σ, l, p) plus the form switch.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelHyperparameters {
    pub sigma: f64,
    pub length: f64,
    pub period: f64,
    pub form: KernelForm,
}

impl Default for KernelHyperparameters {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            length: 1.0,
            period: 2.0 * std::f64::consts::PI,
            form: KernelForm::Standard,
        }
    }
}

impl KernelHyperparameters {
    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.length > 0.0 && self.period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel hyperparameters must be positive, got sigma={}, length={}, period={}",
                self.sigma, self.length, self.period
            )));
        }
        Ok(())
    }

    /// Kernel value between two parameter vectors.
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let inv_l2 = 1.0 / (self.length * self.length);
        let mut product = self.sigma * self.sigma;
        for (x, y) in a.iter().zip(b) {
            let delta = x - y;
            let s = match self.form {
                KernelForm::AsPrinted => {
                    let scaled = delta / self.period;
                    (std::f64::consts::PI * scaled * scaled).sin()
                }
                KernelForm::Standard => (std::f64::consts::PI * delta.abs() / self.period).sin(),
            };
            product *= (-2.0 * inv_l2 * s * s).exp();
        }
        product
    }
}

/// Fitted Gaussian-process surrogate with a constant prior mean equal to the
/// training mean.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: KernelHyperparameters,
    noise_variance: f64,
    train_x: Vec<Vec<f64>>,
    mean_offset: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// Fits the GP to observations, escalating diagonal jitter until the
    /// kernel matrix factors; aborts if it never becomes positive definite.
    pub fn fit(
        hyper: &KernelHyperparameters,
        noise_variance: f64,
        train_x: &[Vec<f64>],
        train_y: &[f64],
    ) -> Result<Self> {
        hyper.validate()?;
        if train_x.is_empty() || train_x.len() != train_y.len() {
            return Err(Error::InvalidInput(format!(
                "need matching non-empty training sets, got {} points and {} values",
                train_x.len(),
                train_y.len()
            )));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidInput(
                "noise variance must be finite and >= 0".into(),
            ));
        }
        let n = train_x.len();
        let dim = train_x[0].len();
        if train_x.iter().any(|x| x.len() != dim) {
            return Err(Error::InvalidInput(
                "training points must share a dimension".into(),
            ));
        }

        let mean_offset = train_y.iter().sum::<f64>() / n as f64;
        let centered = DVector::from_iterator(n, train_y.iter().map(|y| y - mean_offset));
        let base = DMatrix::from_fn(n, n, |i, j| hyper.kernel(&train_x[i], &train_x[j]));

        let scale = hyper.sigma * hyper.sigma;
        let mut jitter = 0.0;
        loop {
            let mut k = base.clone();
            for i in 0..n {
                k[(i, i)] += noise_variance + jitter;
            }
            if let Some(chol) = Cholesky::new(k) {
                let alpha = chol.solve(&centered);
                return Ok(Self {
                    hyper: hyper.clone(),
                    noise_variance,
                    train_x: train_x.to_vec(),
                    mean_offset,
                    chol,
                    alpha,
                    jitter,
                });
            }
            jitter = if jitter == 0.0 {
                1e-12 * scale
            } else {
                jitter * 10.0
            };
            if jitter > 1e-4 * scale {
                return Err(Error::KernelNotPositiveDefinite);
            }
        }
    }

    /// Posterior mean and standard deviation of the latent function.
    pub fn predict(&self, theta: &[f64]) -> (f64, f64) {
        let n = self.train_x.len();
        let kvec =
            DVector::from_iterator(n, self.train_x.iter().map(|x| self.hyper.kernel(x, theta)));
        let mean = self.mean_offset + kvec.dot(&self.alpha);
        let solved = self.chol.solve(&kvec);
        let variance = self.hyper.kernel(theta, theta) - kvec.dot(&solved);
        (mean, variance.max(0.0).sqrt())
    }

    /// Observation noise variance the model was fitted with.
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Diagonal jitter that was required to factor the kernel matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Number of training observations.
    pub fn num_training_points(&self) -> usize {
        self.train_x.len()
    }
}

/// Standard normal cumulative distribution function.
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / SQRT_2))
}

/// Standard normal density.
fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Closed-form Expected Improvement of `theta` over the incumbent `e_min`:
/// (E_min−E)·Φ(z) + ΔE·φ(z) with z = (E_min−E)/ΔE, degrading to
/// max(0, E_min−E) as ΔE → 0.
pub fn expected_improvement(model: &GpModel, theta: &[f64], e_min: f64) -> f64 {
    let (mean, std) = model.predict(theta);
    let gap = e_min - mean;
    if std <= 1e-15 {
        return gap.max(0.0);
    }
    let z = gap / std;
    (gap * normal_cdf(z) + std * normal_pdf(z)).max(0.0)
}

/// Bayesian-optimization settings; defaults follow the module conventions
/// (10-point design, 200-evaluation budget, unit kernel with period 2π).
#[derive(Debug, Clone)]
pub struct BoOptions {
    pub budget: usize,
    pub initial_design: usize,
    pub kernel: KernelHyperparameters,
    /// Total evaluations of the first design point used to estimate noise.
    pub noise_repeats: usize,
    /// Multi-start count for the acquisition maximization.
    pub acquisition_starts: usize,
}

impl Default for BoOptions {
    fn default() -> Self {
        Self {
            budget: 200,
            initial_design: 10,
            kernel: KernelHyperparameters::default(),
            noise_repeats: 3,
            acquisition_starts: 8,
        }
    }
}

/// Minimizes a (possibly stochastic) objective over [0,2π)^dim by GP-based
/// Bayesian optimization with Expected Improvement.
///
/// Seeds `initial_design` uniform random points, estimates observation noise
/// from repeats of the first design point, then alternates GP fit /
/// acquisition maximization / evaluation until `budget` objective
/// evaluations are spent. Acquisition queries hit only the surrogate and do
/// not count against the budget. Returns the best observed point.
pub fn bo_minimize(
    objective: &mut ObjectiveHandle,
    dim: usize,
    options: &BoOptions,
    seed: u64,
) -> Result<OptimizeResult> {
    options.kernel.validate()?;
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if options.initial_design == 0 {
        return Err(Error::InvalidInput(
            "initial design must be non-empty".into(),
        ));
    }
    if options.budget < options.initial_design {
        return Err(Error::InvalidInput(format!(
            "budget {} is smaller than the initial design {}",
            options.budget, options.initial_design
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * std::f64::consts::PI;
    let mut train_x: Vec<Vec<f64>> = Vec::with_capacity(options.budget);
    let mut train_y: Vec<f64> = Vec::with_capacity(options.budget);

    for _ in 0..options.initial_design {
        let theta: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * tau).collect();
        let value = check_finite(objective.evaluate(&theta), &theta)?;
        train_x.push(theta);
        train_y.push(value);
    }

    // Observation-noise estimate: sample variance of repeated evaluations of
    // the first design point (skipped when the budget leaves no room).
    let mut first_point_values = vec![train_y[0]];
    while first_point_values.len() < options.noise_repeats
        && objective.evaluation_count() < options.budget
    {
        let theta = train_x[0].clone();
        let value = check_finite(objective.evaluate(&theta), &theta)?;
        first_point_values.push(value);
        train_x.push(theta);
        train_y.push(value);
    }
    let noise_variance = sample_variance(&first_point_values).max(NOISE_FLOOR);

    let acquisition_options = LocalOptions {
        rho_begin: 0.5,
        rho_end: 1e-3,
        max_evals: 60 + 20 * dim,
    };

    while objective.evaluation_count() < options.budget {
        let model = GpModel::fit(&options.kernel, noise_variance, &train_x, &train_y)?;
        let e_min = train_y.iter().copied().fold(f64::INFINITY, f64::min);

        let mut winner: Option<(Vec<f64>, f64)> = None;
        for _ in 0..options.acquisition_starts.max(1) {
            let start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * tau).collect();
            let mut surrogate =
                ObjectiveHandle::new(|t: &[f64]| -expected_improvement(&model, t, e_min));
            let result = cobyla_minimize(&mut surrogate, &start, &acquisition_options)?;
            let ei = -result.value_best;
            if winner.as_ref().is_none_or(|(_, best)| ei > *best) {
                winner = Some((result.theta_best, ei));
            }
        }
        let (candidate, _) = winner.expect("at least one acquisition start");
        let value = check_finite(objective.evaluate(&candidate), &candidate)?;
        train_x.push(candidate);
        train_y.push(value);
    }

    let best = objective.best().expect("design is non-empty");
    Ok(OptimizeResult {
        theta_best: best.theta.clone(),
        value_best: best.value,
        evaluations: objective.evaluation_count(),
    })
}

/// Unbiased sample variance; zero for fewer than two samples.
fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_kernel() -> KernelHyperparameters {
        KernelHyperparameters::default()
    }

    #[test]
    fn kernel_at_identical_points_equals_sigma_squared() {
        for form in [KernelForm::AsPrinted, KernelForm::Standard] {
            let hyper = KernelHyperparameters {
                sigma: 1.7,
                form,
                ..unit_kernel()
            };
            let theta = [0.3, 5.1, 2.2];
            assert!((hyper.kernel(&theta, &theta) - 1.7 * 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn printed_form_squares_the_scaled_difference_inside_the_sine() {
        let hyper = KernelHyperparameters {
            form: KernelForm::AsPrinted,
            ..unit_kernel()
        };
        let p = hyper.period;
        let delta: f64 = 1.3;
        let expected = (-2.0
            * (std::f64::consts::PI * (delta / p) * (delta / p))
                .sin()
                .powi(2))
        .exp();
        assert!((hyper.kernel(&[delta], &[0.0]) - expected).abs() < 1e-15);

        let standard = KernelHyperparameters {
            form: KernelForm::Standard,
            ..unit_kernel()
        };
        let expected_standard = (-2.0 * (std::f64::consts::PI * delta / p).sin().powi(2)).exp();
        assert!((standard.kernel(&[delta], &[0.0]) - expected_standard).abs() < 1e-15);
    }

    #[test]
    fn printed_form_is_not_positive_semidefinite_and_fit_aborts() {
        // Hand-checked counterexample: for these three points the printed
        // kernel's Gram matrix has determinant ~ -0.118, a negative
        // eigenvalue no reasonable jitter can absorb.
        let hyper = KernelHyperparameters {
            form: KernelForm::AsPrinted,
            ..unit_kernel()
        };
        let train_x = vec![vec![0.5], vec![2.0], vec![4.5]];
        let k01 = hyper.kernel(&train_x[0], &train_x[1]);
        let k02 = hyper.kernel(&train_x[0], &train_x[2]);
        let k12 = hyper.kernel(&train_x[1], &train_x[2]);
        let det = 1.0 + 2.0 * k01 * k02 * k12 - k01 * k01 - k02 * k02 - k12 * k12;
        assert!(
            det < -0.1,
            "expected a clearly indefinite Gram, det = {det}"
        );

        let err = GpModel::fit(&hyper, 1e-6, &train_x, &[1.0, 2.0, 3.0]);
        assert!(matches!(err, Err(Error::KernelNotPositiveDefinite)));
    }

    #[test]
    fn gp_interpolates_training_data_with_zero_noise() {
        let train_x = vec![vec![0.5], vec![2.0], vec![4.5]];
        let train_y = vec![1.0, -2.0, 0.7];
        let model = GpModel::fit(&unit_kernel(), 0.0, &train_x, &train_y).unwrap();
        for (x, y) in train_x.iter().zip(&train_y) {
            let (mean, std) = model.predict(x);
            assert!((mean - y).abs() < 1e-6, "mean {mean} vs obs {y}");
            assert!(std < 1e-4, "std {std}");
        }
    }

    #[test]
    fn symmetric_query_between_two_points_predicts_their_average() {
        // Hand-solved 2x2 system: with a constant prior mean at the training
        // average, the antisymmetric residuals cancel at the midpoint.
        let train_x = vec![vec![1.0], vec![3.0]];
        let train_y = vec![4.0, -6.0];
        let model = GpModel::fit(&unit_kernel(), 1e-8, &train_x, &train_y).unwrap();
        let (mean, _) = model.predict(&[2.0]);
        assert!((mean - (-1.0)).abs() < 1e-9, "mean {mean}");
    }

    #[test]
    fn posterior_variance_never_exceeds_prior_variance_plus_noise() {
        let hyper = KernelHyperparameters {
            sigma: 2.0,
            ..unit_kernel()
        };
        let noise = 0.3;
        let train_x = vec![vec![0.1], vec![1.0], vec![2.5], vec![5.0]];
        let train_y = vec![0.0, 1.0, -1.0, 0.5];
        let model = GpModel::fit(&hyper, noise, &train_x, &train_y).unwrap();
        for k in 0..60 {
            let theta = [k as f64 * 0.11];
            let (_, std) = model.predict(&theta);
            assert!(std * std <= hyper.sigma * hyper.sigma + noise + 1e-12);
        }
    }

    #[test]
    fn expected_improvement_matches_closed_form_anchors() {
        let train_x = vec![vec![0.0], vec![3.0]];
        let train_y = vec![1.0, 2.0];
        let model = GpModel::fit(&unit_kernel(), 1e-6, &train_x, &train_y).unwrap();

        // At a training point the posterior mean is the observation; with
        // e_min equal to that observation EI reduces to std/sqrt(2*pi).
        let (mean, std) = model.predict(&[0.0]);
        let ei = expected_improvement(&model, &[0.0], mean);
        assert!((ei - std / SQRT_2PI).abs() < 1e-12);

        // Where the mean sits above e_min and the std is negligible, EI = 0.
        let ei_zero = expected_improvement(&model, &[3.0], 0.0);
        assert!(ei_zero < 1e-9);

        // Certain improvement: mean far below e_min with tiny std.
        let certain = expected_improvement(&model, &[0.0], mean + 50.0 * (std + 1.0));
        assert!((certain - (mean + 50.0 * (std + 1.0) - mean)).abs() < 1e-6);
    }

    #[test]
    fn ei_is_nonnegative_everywhere() {
        let train_x = vec![vec![0.0], vec![1.5], vec![4.0]];
        let train_y = vec![0.3, -0.8, 0.9];
        let model = GpModel::fit(&unit_kernel(), 1e-4, &train_x, &train_y).unwrap();
        for k in 0..80 {
            let theta = [k as f64 * 0.08];
            assert!(expected_improvement(&model, &theta, -0.8) >= 0.0);
        }
    }

    #[test]
    fn minimizes_cosine_within_budget() {
        let mut hits = 0;
        for seed in 0..10 {
            let mut objective = ObjectiveHandle::new(|t: &[f64]| t[0].cos());
            let options = BoOptions {
                budget: 30,
                ..BoOptions::default()
            };
            let result = bo_minimize(&mut objective, 1, &options, seed).unwrap();
            if result.value_best < -0.95 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "only {hits}/10 seeds reached < -0.95");
    }

    #[test]
    fn budget_equal_to_design_returns_best_of_design() {
        let mut objective = ObjectiveHandle::new(|t: &[f64]| (t[0] - 3.0) * (t[0] - 3.0));
        let options = BoOptions {
            budget: 10,
            initial_design: 10,
            ..BoOptions::default()
        };
        let result = bo_minimize(&mut objective, 1, &options, 5).unwrap();
        assert_eq!(result.evaluations, 10);
        let design_best = objective
            .history()
            .iter()
            .map(|p| p.value)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(result.value_best, design_best);
    }

    #[test]
    fn identical_seeds_give_identical_histories() {
        let run = |seed: u64| {
            let mut objective = ObjectiveHandle::new(|t: &[f64]| t[0].sin() + 0.3 * t[0].cos());
            let options = BoOptions {
                budget: 18,
                ..BoOptions::default()
            };
            bo_minimize(&mut objective, 1, &options, seed).unwrap();
            objective
                .into_history()
                .into_iter()
                .map(|p| (p.theta, p.value))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn rejects_budget_below_design_size() {
        let mut objective = ObjectiveHandle::new(|t: &[f64]| t[0]);
        let options = BoOptions {
            budget: 5,
            initial_design: 10,
            ..BoOptions::default()
        };
        assert!(bo_minimize(&mut objective, 1, &options, 0).is_err());
    }
}
