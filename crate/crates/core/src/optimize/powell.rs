//! Powell conjugate-direction minimizer with a Brent line search.
//!
//! Each sweep line-minimizes along every direction in the current set, then
//! (by Powell's criteria) may replace the direction of largest single-sweep
//! decrease with the overall sweep displacement. No gradients are used;
//! separable quadratics finish in a single sweep because each coordinate
//! line search is exact up to the Brent tolerance.

use super::{check_finite, LocalOptions, ObjectiveHandle, OptimizeResult};
use crate::error::{Error, Result};

const GOLDEN: f64 = 1.618_033_988_749_895;
const MAX_BRACKET_STEPS: usize = 40;
const MAX_BRENT_ITERS: usize = 100;

/// One-dimensional slice of the objective along `direction` through `origin`.
struct LineSlice<'h, 'a> {
    objective: &'h mut ObjectiveHandle<'a>,
    origin: Vec<f64>,
    direction: Vec<f64>,
}

impl LineSlice<'_, '_> {
    fn at(&mut self, alpha: f64) -> Result<f64> {
        let point: Vec<f64> = self
            .origin
            .iter()
            .zip(&self.direction)
            .map(|(x, d)| x + alpha * d)
            .collect();
        check_finite(self.objective.evaluate(&point), &point)
    }
}

/// Expands from alpha = 0 until the objective turns upward, returning a
/// bracket (a, b, c) with phi(b) <= phi(a) and phi(b) <= phi(c). Flat slices
/// yield `None`.
fn bracket_minimum(slice: &mut LineSlice, step: f64) -> Result<Option<(f64, f64, f64, f64)>> {
    let mut a = 0.0;
    let mut fa = slice.at(a)?;
    let mut b = step;
    let mut fb = slice.at(b)?;
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLDEN * (b - a);
    let mut fc = slice.at(c)?;
    let mut expansions = 0;
    while fc < fb {
        expansions += 1;
        if expansions > MAX_BRACKET_STEPS {
            return Ok(None);
        }
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + GOLDEN * (b - a);
        fc = slice.at(c)?;
    }
    if fb == fa && fb == fc {
        return Ok(None);
    }
    let _ = fa;
    Ok(Some((a, b, c, fb)))
}

/// Brent's parabolic-interpolation minimizer on a bracketed interval.
fn brent(slice: &mut LineSlice, bracket: (f64, f64, f64, f64), xtol: f64) -> Result<(f64, f64)> {
    let (mut lo, mid, mut hi, f_mid) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = mid;
    let mut w = mid;
    let mut v = mid;
    let mut fx = f_mid;
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_BRENT_ITERS {
        let m = 0.5 * (lo + hi);
        let tol1 = xtol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // Parabolic fit through (x, w, v).
            let r = (x - w) * (fx - fv);
            let q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            let mut q2 = 2.0 * (q - r);
            if q2 > 0.0 {
                p = -p;
            }
            q2 = q2.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q2 * e_old).abs() && p > q2 * (lo - x) && p < q2 * (hi - x) {
                d = p / q2;
                let u = x + d;
                if (u - lo) < tol2 || (hi - u) < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { hi - x } else { lo - x };
            d = (2.0 - GOLDEN) * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = slice.at(u)?;
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx))
}

/// Line-minimizes through `origin` along `direction`, returning the new
/// point and value (unchanged when the slice is flat).
fn line_minimize(
    objective: &mut ObjectiveHandle,
    origin: &[f64],
    f_origin: f64,
    direction: &[f64],
    step: f64,
    xtol: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut slice = LineSlice {
        objective,
        origin: origin.to_vec(),
        direction: direction.to_vec(),
    };
    let Some(bracket) = bracket_minimum(&mut slice, step)? else {
        return Ok((origin.to_vec(), f_origin));
    };
    let (alpha, f_alpha) = brent(&mut slice, bracket, xtol)?;
    if f_alpha >= f_origin {
        return Ok((origin.to_vec(), f_origin));
    }
    let point = origin
        .iter()
        .zip(direction)
        .map(|(x, d)| x + alpha * d)
        .collect();
    Ok((point, f_alpha))
}

/// Minimizes `objective` from `theta0` by Powell's conjugate-direction method.
///
/// `rho_begin` sets the initial line-search step, `rho_end` the convergence
/// displacement: the search stops once a full sweep moves the iterate less
/// than `rho_end` (or `max_evals` is exhausted).
pub fn powell_minimize(
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
    let xtol = (options.rho_end * 1e-4).max(1e-10);
    let mut directions: Vec<Vec<f64>> = (0..n)
        .map(|axis| {
            let mut e = vec![0.0; n];
            e[axis] = 1.0;
            e
        })
        .collect();

    let mut x = theta0.to_vec();
    let mut fx = check_finite(objective.evaluate(&x), &x)?;

    while objective.evaluation_count() < options.max_evals {
        let sweep_start = x.clone();
        let f_start = fx;
        let mut biggest_drop = 0.0;
        let mut biggest_index = 0;

        for (index, direction) in directions.iter().enumerate() {
            if objective.evaluation_count() >= options.max_evals {
                break;
            }
            let (next, f_next) =
                line_minimize(objective, &x, fx, direction, options.rho_begin, xtol)?;
            let drop = fx - f_next;
            if drop > biggest_drop {
                biggest_drop = drop;
                biggest_index = index;
            }
            x = next;
            fx = f_next;
        }

        let displacement: f64 = x
            .iter()
            .zip(&sweep_start)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let relative_drop = 2.0 * (f_start - fx).abs();
        if displacement < options.rho_end
            || relative_drop <= 1e-12 * (f_start.abs() + fx.abs() + 1e-12)
        {
            break;
        }
        if objective.evaluation_count() >= options.max_evals {
            break;
        }

        // Powell's direction-replacement test against the extrapolated point.
        let extrapolated: Vec<f64> = x
            .iter()
            .zip(&sweep_start)
            .map(|(a, b)| 2.0 * a - b)
            .collect();
        let f_extra = check_finite(objective.evaluate(&extrapolated), &extrapolated)?;
        if f_extra < f_start {
            let t = 2.0 * (f_start - 2.0 * fx + f_extra) * (f_start - fx - biggest_drop).powi(2)
                - biggest_drop * (f_start - f_extra).powi(2);
            if t < 0.0 {
                let new_direction: Vec<f64> =
                    x.iter().zip(&sweep_start).map(|(a, b)| a - b).collect();
                let (next, f_next) = line_minimize(objective, &x, fx, &new_direction, 1.0, xtol)?;
                x = next;
                fx = f_next;
                directions.remove(biggest_index);
                directions.push(new_direction);
            }
        }
    }

    let best = objective.best().expect("at least one evaluation");
    Ok(OptimizeResult {
        theta_best: best.theta.clone(),
        value_best: best.value,
        evaluations: objective.evaluation_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_quadratic_converges_in_few_sweeps() {
        // Minimum at (1, -2, 3, 0.5); each sweep line-minimizes every axis
        // exactly, so one sweep should land at the minimum.
        let target = [1.0, -2.0, 3.0, 0.5];
        let quadratic = |t: &[f64]| -> f64 {
            t.iter()
                .zip(&target)
                .enumerate()
                .map(|(i, (x, c))| (i as f64 + 1.0) * (x - c) * (x - c))
                .sum()
        };
        let mut objective = ObjectiveHandle::new(quadratic);
        let result = powell_minimize(&mut objective, &[0.0; 4], &LocalOptions::default()).unwrap();
        for (found, expected) in result.theta_best.iter().zip(&target) {
            assert!(
                (found - expected).abs() < 1e-6,
                "found {:?}",
                result.theta_best
            );
        }
        assert!(result.value_best < 1e-6);
        // Three sweeps of a 4-D quadratic stay well under the eval budget.
        assert!(result.evaluations < 600, "used {}", result.evaluations);
    }

    #[test]
    fn one_dimensional_parabola_is_solved_precisely() {
        let mut objective = ObjectiveHandle::new(|t: &[f64]| (t[0] - 1.0) * (t[0] - 1.0));
        let result = powell_minimize(&mut objective, &[0.0], &LocalOptions::default()).unwrap();
        assert!(
            (result.theta_best[0] - 1.0).abs() < 1e-4,
            "stopped at {}",
            result.theta_best[0]
        );
    }

    #[test]
    fn constant_objective_terminates_after_one_sweep() {
        let mut objective = ObjectiveHandle::new(|_: &[f64]| -3.5);
        let result =
            powell_minimize(&mut objective, &[1.0, 2.0, 3.0], &LocalOptions::default()).unwrap();
        assert_eq!(result.value_best, -3.5);
        assert!(result.evaluations < 100);
    }

    #[test]
    fn rosenbrock_improves_substantially() {
        let rosenbrock = |t: &[f64]| {
            let (x, y) = (t[0], t[1]);
            100.0 * (y - x * x) * (y - x * x) + (1.0 - x) * (1.0 - x)
        };
        let mut objective = ObjectiveHandle::new(rosenbrock);
        let options = LocalOptions {
            max_evals: 5000,
            ..LocalOptions::default()
        };
        let result = powell_minimize(&mut objective, &[-1.2, 1.0], &options).unwrap();
        assert!(result.value_best < 1e-4, "value {}", result.value_best);
    }
}
