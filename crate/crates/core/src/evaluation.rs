//! Cross-method comparison metrics.

use crate::error::{Error, Result};
use crate::incremental::IncrementalRun;

/// Relative percentage error of `e` against a baseline error `e_star`.
/// Negative when `e` beats the baseline.
pub fn percentage_error(e: f64, e_star: f64) -> Result<f64> {
    if !(e_star > 0.0) {
        return Err(Error::Domain(format!("baseline error must be positive, got {e_star}")));
    }
    Ok((e - e_star) / e_star * 100.0)
}

/// Gap between `e` and the best error at the same k.
pub fn error_difference(e: f64, e_best: f64) -> f64 {
    debug_assert!(e >= e_best, "e_best must be the minimum across methods");
    e - e_best
}

/// Mean Lloyd iterations per execution for every k, pooled over `runs`.
///
/// The denominator at k is the number of Lloyd executions at that k (the
/// candidate or restart count), not the number of runs. A k with no
/// executions reports 0.
pub fn aggregate_iterations(runs: &[&IncrementalRun]) -> Result<Vec<f64>> {
    if runs.is_empty() {
        return Err(Error::Domain("no runs to aggregate".into()));
    }
    let k_max = runs.iter().map(|r| r.stats.len()).max().unwrap_or(0);
    Ok((0..k_max)
        .map(|i| {
            let (iters, execs) = runs
                .iter()
                .filter_map(|r| r.stats.get(i))
                .fold((0usize, 0usize), |(it, ex), s| (it + s.lloyd_iterations, ex + s.executions));
            if execs == 0 {
                0.0
            } else {
                iters as f64 / execs as f64
            }
        })
        .collect())
}
