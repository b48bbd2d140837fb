//! Exact enumeration oracles over binary layouts.

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, Layout};
use crate::qubo::{is_feasible, InteractionTable, QuboProblem};

/// Hard cap on qubit/site count for full enumeration.
pub const ENUMERATION_CAP: usize = 24;

/// Search space for the exhaustive oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Only layouts with exactly m turbines (and ξ separation when set).
    FeasibleOnly,
    /// Every binary string of length q.
    All,
}

/// Ascending iterator over all C(q, m) weight-m labels of width q
/// (Gosper's hack: each step produces the next-larger integer with the same
/// popcount).
pub fn fixed_weight_labels(q: usize, m: usize) -> impl Iterator<Item = u64> {
    let limit: u64 = 1u64 << q;
    let first: Option<u64> = if m > q {
        None
    } else if m == 0 {
        Some(0)
    } else {
        Some((1u64 << m) - 1)
    };
    std::iter::successors(first, move |&label| {
        if label == 0 {
            return None;
        }
        let lowest = label & label.wrapping_neg();
        let ripple = label + lowest;
        let ones = label ^ ripple;
        let next = ripple | ((ones >> 2) / lowest);
        (next < limit).then_some(next)
    })
    .take_while(move |&label| label < limit)
}

fn check_cap(q: usize) -> Result<()> {
    if q > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            what: "site count for exhaustive search",
            got: q,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

/// Collects the layouts attaining the best value among `candidates`.
///
/// `better` orders candidates (e.g. `>` for maximization); ties within
/// 1e-9·(1+|best|) absolute are kept, then resolved into a canonical
/// ascending-label ordering.
fn collect_optima<I, F>(candidates: I, score: F, maximize: bool) -> (f64, Vec<Layout>)
where
    I: Iterator<Item = Layout>,
    F: Fn(&Layout) -> f64,
{
    let scored: Vec<(Layout, f64)> = candidates
        .map(|l| {
            let s = score(&l);
            (l, s)
        })
        .collect();
    let best = scored.iter().map(|(_, s)| *s).fold(
        if maximize {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        },
        |acc, s| {
            if maximize {
                acc.max(s)
            } else {
                acc.min(s)
            }
        },
    );
    let tol = 1e-9 * (1.0 + best.abs());
    let mut optima: Vec<Layout> = scored
        .into_iter()
        .filter(|(_, s)| (s - best).abs() <= tol)
        .map(|(l, _)| l)
        .collect();
    optima.sort_by_key(Layout::to_label);
    (best, optima)
}

/// Maximum farm power over feasible layouts and the complete set of layouts
/// attaining it, sorted ascending by integer label.
pub fn exhaustive_max_power(
    table: &InteractionTable,
    m: usize,
    xi: f64,
    geometry: &GridGeometry,
) -> Result<(f64, Vec<Layout>)> {
    let q = geometry.num_sites();
    check_cap(q)?;
    if m > q {
        return Err(Error::InvalidInput(format!(
            "cannot place {m} turbines on {q} sites"
        )));
    }
    let candidates = fixed_weight_labels(q, m)
        .map(|label| Layout::from_label(label, q).expect("label within width"))
        .filter(|layout| is_feasible(layout, m, xi, geometry));
    let (best, optima) = collect_optima(candidates, |l| table.objective(l), true);
    if optima.is_empty() {
        return Err(Error::InvalidInput(
            "no feasible layout under the given constraints".into(),
        ));
    }
    Ok((best, optima))
}

/// Minimum QUBO value over the chosen search space and the complete argmin
/// set, sorted ascending by integer label.
pub fn exhaustive_min_qubo(
    problem: &QuboProblem,
    mode: SearchMode,
    geometry: &GridGeometry,
) -> Result<(f64, Vec<Layout>)> {
    let q = problem.num_sites;
    check_cap(q)?;
    let score = |l: &Layout| problem.evaluate(l);
    let result = match mode {
        SearchMode::All => {
            let candidates = (0u64..(1u64 << q))
                .map(|label| Layout::from_label(label, q).expect("label within width"));
            collect_optima(candidates, score, false)
        }
        SearchMode::FeasibleOnly => {
            let candidates = fixed_weight_labels(q, problem.m)
                .map(|label| Layout::from_label(label, q).expect("label within width"))
                .filter(|layout| is_feasible(layout, problem.m, problem.xi, geometry));
            collect_optima(candidates, score, false)
        }
    };
    if result.1.is_empty() {
        return Err(Error::InvalidInput("search space is empty".into()));
    }
    Ok(result)
}
