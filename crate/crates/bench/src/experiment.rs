//! Runs every (method, L, seed) sweep of a configuration and assembles the
//! report rows.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use gkmpp::{
    aggregate_iterations, error_difference, incremental_run, kmeanspp_seed, percentage_error, run_lloyd,
    uniform_seed, CenterSet, Dataset, IncrementalRun, KStats, LloydConfig, RngState, Sampler, Strategy,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method};
use crate::report::{ExperimentReport, ReportRow, SweepSummary};
use crate::BenchError;

/// Seeding used by the restart baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartInit {
    KmeansPP,
    Uniform,
}

/// Independent Lloyd restarts for every k, keeping the per-k minimum.
///
/// Restart `r` at sub-problem `k` seeds from its own substream of `seed`,
/// so the draws do not depend on scheduling. All seeding happens before
/// the Lloyd runs fan out.
pub fn restart_sweep(
    data: &Dataset,
    k_max: usize,
    restarts: usize,
    init: RestartInit,
    seed: u64,
    cfg: &LloydConfig,
    deadline: Option<Instant>,
) -> gkmpp::Result<IncrementalRun> {
    if restarts == 0 {
        return Err(gkmpp::Error::Domain("restarts must be at least 1".into()));
    }
    let base = RngState::new(seed);
    let mut solutions = Vec::with_capacity(k_max);
    let mut stats = Vec::with_capacity(k_max);
    let mut truncated = false;
    for k in 1..=k_max {
        let start = Instant::now();
        if k > 1 && deadline.is_some_and(|d| start >= d) {
            truncated = true;
            break;
        }
        let inits = (0..restarts)
            .map(|r| {
                let mut rng = base.substream(((k as u64) << 32) | r as u64);
                match init {
                    RestartInit::KmeansPP => kmeanspp_seed(data, k, &mut rng),
                    RestartInit::Uniform => uniform_seed(data, k, &mut rng),
                }
            })
            .collect::<gkmpp::Result<Vec<CenterSet>>>()?;
        let runs = inits
            .par_iter()
            .map(|c| run_lloyd(data, c, cfg))
            .collect::<gkmpp::Result<Vec<_>>>()?;
        let iterations = runs.iter().map(|s| s.iterations).sum();
        let best = runs
            .into_iter()
            .reduce(|a, b| if b.error < a.error { b } else { a })
            .expect("at least one restart");
        solutions.push(best);
        stats.push(KStats { executions: restarts, lloyd_iterations: iterations, wall: start.elapsed() });
    }
    Ok(IncrementalRun { solutions, stats, degenerate_from: None, truncated })
}

struct Cell {
    method: Method,
    l: usize,
    seed: u64,
    run: IncrementalRun,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Executes the configured experiment on a pool of `config.workers` threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    config.validate()?;
    let data = config.load_dataset()?;
    if config.k_max > data.n() {
        return Err(BenchError::Config(format!("--k-max {} exceeds the {} datapoints", config.k_max, data.n())));
    }
    if config.methods.contains(&Method::Fgkm) {
        if let Some(&l) = config.candidates.iter().find(|&&l| l > data.n()) {
            return Err(BenchError::Config(format!("fgkm needs L <= N, got L={l} with N={}", data.n())));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let cells = pool.install(|| run_cells(config, &data))?;
    Ok(assemble(config, cells))
}

fn run_cells(config: &ExperimentConfig, data: &Dataset) -> Result<Vec<Cell>, BenchError> {
    let deadline = || config.budget.map(|b| Instant::now() + b);
    let mut cells = Vec::new();
    for &method in &config.methods {
        let fail = |l: usize, seed: u64| {
            move |source| BenchError::Run { method: method.to_string(), l, seed, k: None, source }
        };
        match method {
            Method::Global => {
                // deterministic: computed once, reported under every seed
                let run = incremental_run(data, config.k_max, Strategy::Global, &mut RngState::new(0), &config.lloyd, deadline())
                    .map_err(fail(data.n(), config.seeds[0]))?;
                for &seed in &config.seeds {
                    cells.push(Cell { method, l: data.n(), seed, run: run.clone() });
                }
            }
            Method::Fgkm => {
                for &l in &config.candidates {
                    let run = incremental_run(data, config.k_max, Strategy::Fgkm { l }, &mut RngState::new(0), &config.lloyd, deadline())
                        .map_err(fail(l, config.seeds[0]))?;
                    for &seed in &config.seeds {
                        cells.push(Cell { method, l, seed, run: run.clone() });
                    }
                }
            }
            Method::GkmppBatch | Method::GkmppSeq => {
                let default = if method == Method::GkmppBatch { Sampler::Batch } else { Sampler::Sequential };
                let sampler = config.sampler.unwrap_or(default);
                for &l in &config.candidates {
                    for &seed in &config.seeds {
                        let strategy = Strategy::GlobalKmeansPP { l, sampler };
                        let run = incremental_run(data, config.k_max, strategy, &mut RngState::new(seed), &config.lloyd, deadline())
                            .map_err(fail(l, seed))?;
                        cells.push(Cell { method, l, seed, run });
                    }
                }
            }
            Method::KmeansPP | Method::Random => {
                let init = if method == Method::KmeansPP { RestartInit::KmeansPP } else { RestartInit::Uniform };
                let counts = match config.restarts {
                    Some(r) => vec![r],
                    None => config.candidates.clone(),
                };
                for l in counts {
                    for &seed in &config.seeds {
                        let run = restart_sweep(data, config.k_max, l, init, seed, &config.lloyd, deadline())
                            .map_err(fail(l, seed))?;
                        cells.push(Cell { method, l, seed, run });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn assemble(config: &ExperimentConfig, cells: Vec<Cell>) -> ExperimentReport {
    let baseline = config.baseline_method();
    let mut reference: HashMap<(u64, usize), f64> = HashMap::new();
    let mut best: HashMap<(u64, usize), f64> = HashMap::new();
    for cell in &cells {
        for (i, sol) in cell.run.solutions.iter().enumerate() {
            let key = (cell.seed, i + 1);
            if Some(cell.method) == baseline {
                reference.entry(key).or_insert(sol.error);
            }
            let b = best.entry(key).or_insert(sol.error);
            *b = b.min(sol.error);
        }
    }

    let mut report = ExperimentReport::default();
    for cell in &cells {
        let iters = aggregate_iterations(&[&cell.run]).expect("one run");
        for (i, sol) in cell.run.solutions.iter().enumerate() {
            let key = (cell.seed, i + 1);
            report.rows.push(ReportRow {
                method: cell.method.to_string(),
                l: cell.l,
                seed: cell.seed,
                k: i + 1,
                error: sol.error,
                pe: reference.get(&key).and_then(|&e_star| percentage_error(sol.error, e_star).ok()),
                err_diff: error_difference(sol.error, best[&key]),
                mean_iters: iters[i],
                wall_ms: config.record_timing.then(|| ms(cell.run.stats[i].wall)),
            });
        }
        report.sweeps.push(SweepSummary {
            method: cell.method.to_string(),
            l: cell.l,
            seed: cell.seed,
            wall_ms: ms(cell.run.total_wall()),
            k_reached: cell.run.k_max(),
            truncated: cell.run.truncated,
        });
    }
    report
}
