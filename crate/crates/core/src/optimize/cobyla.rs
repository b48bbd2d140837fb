//! Linear-approximation trust-region minimizer.
//!
//! Keeps an (n+1)-point simplex, fits a linear model of the objective through
//! its vertices, and steps from the best vertex against the model gradient.
//! Two radii control the search: a working trust radius that grows on
//! successful steps and shrinks on failures, and a monotone lower bound that
//! decays from `rho_begin` to `rho_end` and decides termination. Failed steps
//! with a stale simplex trigger geometry-repair evaluations instead of
//! shrinking, which keeps the secant gradient honest in curved valleys.

use nalgebra::{DMatrix, DVector};

use super::{check_finite, LocalOptions, ObjectiveHandle, OptimizeResult};
use crate::error::{Error, Result};

struct Vertex {
    point: Vec<f64>,
    value: f64,
}

/// Distance between two points.
fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Least-change linear model gradient from simplex differences, or `None`
/// when the vertex matrix is singular (degenerate geometry).
fn simplex_gradient(simplex: &[Vertex]) -> Option<DVector<f64>> {
    let n = simplex[0].point.len();
    let mut d = DMatrix::zeros(n, n);
    let mut df = DVector::zeros(n);
    for row in 0..n {
        for col in 0..n {
            d[(row, col)] = simplex[row + 1].point[col] - simplex[0].point[col];
        }
        df[row] = simplex[row + 1].value - simplex[0].value;
    }
    d.lu().solve(&df)
}

/// Moves the vertex with the best value to index 0.
fn promote_best(simplex: &mut [Vertex]) {
    let best = simplex
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .map(|(i, _)| i)
        .unwrap_or(0);
    simplex.swap(0, best);
}

/// Index of the worst vertex (never 0 after [`promote_best`]).
fn worst_index(simplex: &[Vertex]) -> usize {
    simplex
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .map(|(i, _)| i)
        .unwrap_or(1)
}

/// True when every vertex sits within `radius` of the best vertex.
fn is_fresh(simplex: &[Vertex], radius: f64) -> bool {
    simplex[1..]
        .iter()
        .all(|v| distance(&v.point, &simplex[0].point) <= radius)
}

/// Minimizes `objective` from `theta0` under the trust-region contract.
///
/// Terminates when the lower radius shrinks below `rho_end` or `max_evals`
/// is reached; the returned point is the best evaluation ever recorded,
/// never worse than any point in the history.
pub fn cobyla_minimize(
    objective: &mut ObjectiveHandle,
    theta0: &[f64],
    options: &LocalOptions,
) -> Result<OptimizeResult> {
    options.validate()?;
    if theta0.is_empty() {
        return Err(Error::InvalidInput("theta0 must be non-empty".into()));
    }
    if theta0.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("theta0 must be finite".into()));
    }

    let n = theta0.len();
    let mut rho = options.rho_begin;
    let mut delta = options.rho_begin;
    let mut axis_cycle = 0usize;
    // Consecutive failed iterations at the bottom resolution; the monotone
    // radius halves only after several strikes, so alternating
    // success/failure phases (valley crawling) keep their resolution.
    let mut level_failures = 0usize;
    // Best points at recent improvements; their chord averages out
    // cross-valley zigzag and feeds occasional long extrapolation jumps.
    let mut recent_bests: std::collections::VecDeque<Vec<f64>> =
        std::collections::VecDeque::with_capacity(4);

    let mut simplex = Vec::with_capacity(n + 1);
    let f0 = check_finite(objective.evaluate(theta0), theta0)?;
    simplex.push(Vertex {
        point: theta0.to_vec(),
        value: f0,
    });
    for axis in 0..n {
        if objective.evaluation_count() >= options.max_evals {
            break;
        }
        let mut point = theta0.to_vec();
        point[axis] += rho;
        let value = check_finite(objective.evaluate(&point), &point)?;
        simplex.push(Vertex { point, value });
    }

    while objective.evaluation_count() < options.max_evals && simplex.len() == n + 1 {
        promote_best(&mut simplex);
        let f_best = simplex[0].value;

        // Replaces the farthest vertex with a fresh axis point at the
        // current scale; one evaluation per repair (no-op once the budget
        // is spent — the loop condition then exits).
        let geometry_step = |simplex: &mut Vec<Vertex>,
                             objective: &mut ObjectiveHandle,
                             axis_cycle: &mut usize,
                             delta: f64|
         -> Result<()> {
            if objective.evaluation_count() >= options.max_evals {
                return Ok(());
            }
            let axis = *axis_cycle % n;
            let sign = if (*axis_cycle / n).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            *axis_cycle += 1;
            let mut point = simplex[0].point.clone();
            point[axis] += sign * delta;
            let value = check_finite(objective.evaluate(&point), &point)?;
            let farthest = simplex
                .iter()
                .enumerate()
                .skip(1)
                .max_by(|a, b| {
                    distance(&a.1.point, &simplex[0].point)
                        .total_cmp(&distance(&b.1.point, &simplex[0].point))
                })
                .map(|(i, _)| i)
                .unwrap_or(1);
            simplex[farthest] = Vertex { point, value };
            Ok(())
        };

        let Some(gradient) = simplex_gradient(&simplex) else {
            geometry_step(&mut simplex, objective, &mut axis_cycle, delta)?;
            continue;
        };
        let gnorm = gradient.norm();
        let model_is_flat = delta * gnorm <= 1e-12 * (1.0 + f_best.abs());

        let mut improved = false;
        if !model_is_flat {
            let direction: Vec<f64> = gradient.iter().map(|g| -g / gnorm).collect();
            let origin = simplex[0].point.clone();
            let probe = |origin: &[f64], step: f64| -> Vec<f64> {
                origin
                    .iter()
                    .zip(&direction)
                    .map(|(x, d)| x + step * d)
                    .collect()
            };

            let trial = probe(&origin, delta);
            let f_trial = check_finite(objective.evaluate(&trial), &trial)?;

            if f_trial < f_best {
                improved = true;
                let worst = worst_index(&simplex);
                simplex[worst] = Vertex {
                    point: trial,
                    value: f_trial,
                };
                // Expansion probe plus a parabolic line fit along the step.
                if objective.evaluation_count() < options.max_evals {
                    let extended = probe(&origin, 2.0 * delta);
                    let f_extended = check_finite(objective.evaluate(&extended), &extended)?;
                    let mut winner_step = delta;
                    let mut winner_value = f_trial;
                    if f_extended < winner_value {
                        let worst = worst_index(&simplex);
                        simplex[worst] = Vertex {
                            point: extended,
                            value: f_extended,
                        };
                        winner_step = 2.0 * delta;
                        winner_value = f_extended;
                    }
                    let curvature = (f_extended - 2.0 * f_trial + f_best) / (delta * delta);
                    if curvature > 0.0 && objective.evaluation_count() < options.max_evals {
                        let slope = (4.0 * f_trial - f_extended - 3.0 * f_best) / (2.0 * delta);
                        let alpha = -slope / curvature;
                        if alpha > 0.0
                            && alpha <= 4.0 * delta
                            && (alpha - delta).abs() > 0.1 * delta
                            && (alpha - 2.0 * delta).abs() > 0.1 * delta
                        {
                            let refined = probe(&origin, alpha);
                            let f_refined = check_finite(objective.evaluate(&refined), &refined)?;
                            if f_refined < winner_value {
                                let worst = worst_index(&simplex);
                                simplex[worst] = Vertex {
                                    point: refined,
                                    value: f_refined,
                                };
                                winner_step = alpha;
                                winner_value = f_refined;
                            }
                        }
                    }
                    let _ = winner_value;
                    if winner_step >= 1.9 * delta {
                        delta *= 2.0;
                    }
                }
            } else if objective.evaluation_count() < options.max_evals {
                // The full step overshot; a half step along the same
                // direction often still descends in curved valleys.
                let half = probe(&origin, 0.5 * delta);
                let f_half = check_finite(objective.evaluate(&half), &half)?;
                if f_half < f_best {
                    improved = true;
                    let worst = worst_index(&simplex);
                    simplex[worst] = Vertex {
                        point: half,
                        value: f_half,
                    };
                    delta = (0.6 * delta).max(rho);
                } else {
                    let worst = worst_index(&simplex);
                    if f_trial < simplex[worst].value {
                        simplex[worst] = Vertex {
                            point: trial,
                            value: f_trial,
                        };
                    }
                }
            }
        }

        if improved {
            level_failures = 0;
            promote_best(&mut simplex);
            recent_bests.push_back(simplex[0].point.clone());
            if recent_bests.len() > 4 {
                recent_bests.pop_front();
            }
            // Long jump: double the displacement accumulated over the last
            // few improvements, a chord that points along the valley.
            if recent_bests.len() == 4 && objective.evaluation_count() < options.max_evals {
                let oldest = &recent_bests[0];
                let newest = &simplex[0].point;
                let jump: Vec<f64> = newest
                    .iter()
                    .zip(oldest)
                    .map(|(a, b)| 2.0 * a - b)
                    .collect();
                if distance(&jump, newest) >= 2.0 * delta {
                    let f_jump = check_finite(objective.evaluate(&jump), &jump)?;
                    if f_jump < simplex[0].value {
                        let worst = worst_index(&simplex);
                        simplex[worst] = Vertex {
                            point: jump.clone(),
                            value: f_jump,
                        };
                        recent_bests.pop_front();
                        recent_bests.push_back(jump);
                    }
                }
            }
            continue;
        }

        // Failure ladder: repair stale geometry, then shrink the working
        // radius, and only after repeated strikes at the bottom resolution
        // lower the monotone bound.
        if !is_fresh(&simplex, 3.0 * delta) {
            geometry_step(&mut simplex, objective, &mut axis_cycle, delta)?;
            continue;
        }
        if delta > rho {
            delta = (delta * 0.5).max(rho);
            continue;
        }
        level_failures += 1;
        if level_failures >= 5 {
            rho *= 0.5;
            if rho < options.rho_end {
                break;
            }
            delta = rho;
            level_failures = 0;
        } else {
            // Perturb the simplex so the retry sees a different model.
            geometry_step(&mut simplex, objective, &mut axis_cycle, delta)?;
        }
    }

    let best = objective.best().expect("at least one evaluation");
    Ok(OptimizeResult {
        theta_best: best.theta.clone(),
        value_best: best.value,
        evaluations: objective.evaluation_count(),
    })
}
