//! Incremental solvers that build the k-cluster solution from the
//! (k-1)-cluster one: global k-means, fast global k-means (top-L by the
//! `b_n` bound) and global k-means++ with batch or sequential candidate
//! sampling.
//!
//! For each k the candidate Lloyd runs execute on the current rayon pool.
//! The winner is the minimum of `(error, candidate position)`, so the
//! result does not depend on how many workers ran.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lloyd::{lloyd_from_assignment, LloydConfig};
use crate::model::{
    compensated_sum, sq_dist, Assignment, CenterSet, ClusteringSolution, Dataset, NearestDistances, Neumaier,
};
use crate::seeding::{d2_probabilities, draw_weighted, sample_index, RngState};

/// Default number of bound rows computed per parallel task in [`fgkm_bounds`].
pub const DEFAULT_BOUND_BLOCK: usize = 64;

/// Candidate sampling strategy for [`global_kmeanspp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    /// `L` draws without replacement from one D² distribution.
    Batch,
    /// `L` draws, each from the D² distribution updated with the previous draws.
    Sequential,
    /// Every datapoint is a candidate; reproduces global k-means.
    Exhaustive,
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::Batch => "batch",
            Sampler::Sequential => "sequential",
            Sampler::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(Sampler::Batch),
            "sequential" | "seq" => Ok(Sampler::Sequential),
            "exhaustive" => Ok(Sampler::Exhaustive),
            other => Err(Error::Domain(format!("unknown sampler '{other}'"))),
        }
    }
}

/// Distinct point indices proposed as the starting position of a new center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub indices: Vec<usize>,
    /// Fewer than the requested number of candidates could be drawn.
    pub shortfall: bool,
}

/// Bookkeeping for one k of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KStats {
    /// Lloyd executions performed for this k.
    pub executions: usize,
    /// Lloyd iterations summed over those executions.
    pub lloyd_iterations: usize,
    pub wall: Duration,
}

/// Solutions for every k = 1..=K of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalRun {
    /// `solutions[k - 1]` is the k-cluster solution.
    pub solutions: Vec<ClusteringSolution>,
    pub stats: Vec<KStats>,
    /// First k whose solution is a padded copy because no candidate with
    /// positive distance remained.
    pub degenerate_from: Option<usize>,
    /// The sweep hit its deadline before reaching the requested K.
    pub truncated: bool,
}

impl IncrementalRun {
    pub fn k_max(&self) -> usize {
        self.solutions.len()
    }

    pub fn solution(&self, k: usize) -> &ClusteringSolution {
        &self.solutions[k - 1]
    }

    pub fn errors(&self) -> Vec<f64> {
        self.solutions.iter().map(|s| s.error).collect()
    }

    pub fn total_wall(&self) -> Duration {
        self.stats.iter().map(|s| s.wall).sum()
    }

    /// True when errors and centers match `other` bit for bit at every k.
    pub fn same_solutions(&self, other: &IncrementalRun) -> bool {
        self.solutions.len() == other.solutions.len()
            && self.solutions.iter().zip(&other.solutions).all(|(a, b)| {
                a.error.to_bits() == b.error.to_bits()
                    && a.centers.as_flat().len() == b.centers.as_flat().len()
                    && a.centers.as_flat().iter().zip(b.centers.as_flat()).all(|(x, y)| x.to_bits() == y.to_bits())
                    && a.assignment == b.assignment
                    && a.iterations == b.iterations
            })
    }
}

/// Optimal one-cluster solution: the dataset mean.
pub fn solve_k1(dataset: &Dataset) -> ClusteringSolution {
    let mean = dataset.mean();
    let dists: Vec<f64> = dataset.rows().map(|x| sq_dist(x, &mean)).collect();
    let distances = NearestDistances::new(dists).expect("squared distances are non-negative");
    let error = distances.total();
    ClusteringSolution {
        centers: CenterSet::from_flat(mean, dataset.d()).expect("mean of finite data is finite"),
        assignment: Assignment::new(vec![0; dataset.n()]),
        distances,
        error,
        iterations: 0,
    }
}

fn check_sweep(dataset: &Dataset, k_max: usize) -> Result<()> {
    if k_max == 0 || k_max > dataset.n() {
        return Err(Error::Domain(format!(
            "K must lie in 1..={} (got {k_max})",
            dataset.n()
        )));
    }
    Ok(())
}

/// Starting state of a Lloyd run from `prev.centers ∪ {x_c}`. The
/// assignment is derived from the previous one: a point moves to the new
/// center only when strictly closer, which is what a full pass with the
/// lowest-index tie-break would produce.
fn seed_from_candidate(
    dataset: &Dataset,
    prev: &ClusteringSolution,
    c: usize,
) -> (CenterSet, Assignment, NearestDistances) {
    let xc = dataset.point(c);
    let centers = prev.centers.with_center(xc);
    let new_label = prev.centers.k();
    let mut labels = prev.assignment.labels().to_vec();
    let mut dists = prev.distances.as_slice().to_vec();
    for ((x, l), d) in dataset.rows().zip(labels.iter_mut()).zip(dists.iter_mut()) {
        let dc = sq_dist(x, xc);
        if dc < *d {
            *l = new_label;
            *d = dc;
        }
    }
    (centers, Assignment::new(labels), NearestDistances::from_vec_unchecked(dists))
}

struct Best {
    position: usize,
    solution: ClusteringSolution,
    iterations: usize,
}

fn better(a: Best, b: Best) -> Best {
    let ord = a
        .solution
        .error
        .total_cmp(&b.solution.error)
        .then(a.position.cmp(&b.position));
    let iterations = a.iterations + b.iterations;
    let mut winner = if ord == Ordering::Greater { b } else { a };
    winner.iterations = iterations;
    winner
}

/// Runs Lloyd once per candidate and keeps the minimum-error solution.
/// Returns the winner and the summed iteration count.
fn best_of_candidates(
    dataset: &Dataset,
    prev: &ClusteringSolution,
    candidates: &[usize],
    cfg: &LloydConfig,
) -> (ClusteringSolution, usize) {
    let best = candidates
        .par_iter()
        .enumerate()
        .map(|(position, &c)| {
            let (centers, labels, dists) = seed_from_candidate(dataset, prev, c);
            let solution = lloyd_from_assignment(dataset, centers, labels, dists, cfg, None);
            let iterations = solution.iterations;
            Best { position, solution, iterations }
        })
        .reduce_with(better)
        .expect("candidate list is never empty");
    (best.solution, best.iterations)
}

/// Copy of `prev` with a duplicate of its last center appended. Ties go to
/// the lower index, so the labels and error are unchanged.
fn pad_solution(prev: &ClusteringSolution) -> ClusteringSolution {
    let last = prev.centers.center(prev.centers.k() - 1).to_vec();
    ClusteringSolution {
        centers: prev.centers.with_center(&last),
        assignment: prev.assignment.clone(),
        distances: prev.distances.clone(),
        error: prev.error,
        iterations: 0,
    }
}

/// Shared driver. `propose` returns the candidate indices for the next k
/// given the (k-1) solution, or `Error::EmptyCandidates`. Once `deadline`
/// has passed no further k is started.
fn sweep<F>(
    dataset: &Dataset,
    k_max: usize,
    cfg: &LloydConfig,
    deadline: Option<Instant>,
    mut propose: F,
) -> Result<IncrementalRun>
where
    F: FnMut(&ClusteringSolution) -> Result<Vec<usize>>,
{
    check_sweep(dataset, k_max)?;
    cfg.validate()?;
    let start = Instant::now();
    let mut solutions = vec![solve_k1(dataset)];
    let mut stats = vec![KStats { executions: 0, lloyd_iterations: 0, wall: start.elapsed() }];
    let mut degenerate_from = None;
    let mut truncated = false;

    for k in 2..=k_max {
        let start = Instant::now();
        if deadline.is_some_and(|d| start >= d) {
            truncated = true;
            break;
        }
        let prev = solutions.last().expect("k=1 solution present");
        let (next, executions, iterations) = if degenerate_from.is_some() {
            (pad_solution(prev), 0, 0)
        } else {
            match propose(prev) {
                Ok(cands) => {
                    let (sol, iters) = best_of_candidates(dataset, prev, &cands, cfg);
                    (sol, cands.len(), iters)
                }
                Err(Error::EmptyCandidates) => {
                    degenerate_from = Some(k);
                    (pad_solution(prev), 0, 0)
                }
                Err(e) => return Err(e),
            }
        };
        solutions.push(next);
        stats.push(KStats { executions, lloyd_iterations: iterations, wall: start.elapsed() });
    }
    Ok(IncrementalRun { solutions, stats, degenerate_from, truncated })
}

/// Candidate rule of an incremental solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every datapoint (global k-means).
    Global,
    /// The `l` points with the largest `b_n` bound.
    Fgkm { l: usize },
    /// `l` points drawn from the k-means++ distribution.
    GlobalKmeansPP { l: usize, sampler: Sampler },
}

/// Runs an incremental sweep for k = 1..=`k_max`, stopping early (and
/// marking the run truncated) once `deadline` passes. `rng` is only drawn
/// from by the sampling strategies.
pub fn incremental_run(
    dataset: &Dataset,
    k_max: usize,
    strategy: Strategy,
    rng: &mut RngState,
    cfg: &LloydConfig,
    deadline: Option<Instant>,
) -> Result<IncrementalRun> {
    let all: Vec<usize> = (0..dataset.n()).collect();
    match strategy {
        Strategy::Global => sweep(dataset, k_max, cfg, deadline, |_| Ok(all.clone())),
        Strategy::Fgkm { l } => {
            if l == 0 || l > dataset.n() {
                return Err(Error::Domain(format!("L must lie in 1..={} (got {l})", dataset.n())));
            }
            sweep(dataset, k_max, cfg, deadline, |prev| {
                let bounds = fgkm_bounds(dataset, &prev.distances)?;
                Ok(top_candidates(&bounds, l))
            })
        }
        Strategy::GlobalKmeansPP { l, sampler } => {
            check_l(l)?;
            sweep(dataset, k_max, cfg, deadline, |prev| match sampler {
                Sampler::Exhaustive => Ok(all.clone()),
                Sampler::Batch => Ok(batch_sample(&prev.distances, l, rng)?.indices),
                Sampler::Sequential => Ok(sequential_sample(dataset, &prev.distances, l, rng)?.indices),
            })
        }
    }
}

/// Global k-means: every datapoint is tried as the start of the new center.
pub fn global_kmeans(dataset: &Dataset, k_max: usize, cfg: &LloydConfig) -> Result<IncrementalRun> {
    incremental_run(dataset, k_max, Strategy::Global, &mut RngState::new(0), cfg, None)
}

/// `b_n = sum_j max(d_j - |x_n - x_j|^2, 0)` for every n: the exact error
/// reduction from adding a center at `x_n` before any Lloyd refinement.
pub fn fgkm_bounds(dataset: &Dataset, d: &NearestDistances) -> Result<Vec<f64>> {
    fgkm_bounds_blocked(dataset, d, DEFAULT_BOUND_BLOCK)
}

/// [`fgkm_bounds`] with an explicit number of rows per parallel block.
/// Pairwise distances are never stored.
pub fn fgkm_bounds_blocked(dataset: &Dataset, d: &NearestDistances, block_rows: usize) -> Result<Vec<f64>> {
    if d.len() != dataset.n() {
        return Err(Error::LengthMismatch { expected: dataset.n(), found: d.len() });
    }
    let block_rows = block_rows.max(1);
    let dj = d.as_slice();
    let mut bounds = vec![0.0; dataset.n()];
    bounds.par_chunks_mut(block_rows).enumerate().for_each(|(block, out)| {
        let first = block * block_rows;
        for (offset, b) in out.iter_mut().enumerate() {
            let xn = dataset.point(first + offset);
            let mut acc = Neumaier::default();
            for (x, &dist) in dataset.rows().zip(dj) {
                let gain = dist - sq_dist(xn, x);
                if gain > 0.0 {
                    acc.add(gain);
                }
            }
            *b = acc.total();
        }
    });
    Ok(bounds)
}

/// Indices of the `l` largest bounds, ties to the lower index.
pub fn top_candidates(bounds: &[f64], l: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..bounds.len()).collect();
    idx.sort_by(|&a, &b| bounds[b].total_cmp(&bounds[a]).then(a.cmp(&b)));
    idx.truncate(l);
    idx
}

/// Fast global k-means, relaxed to the `l` candidates with the largest
/// bound per k (`l = 1` is the original single-candidate method).
pub fn fgkm(dataset: &Dataset, k_max: usize, l: usize, cfg: &LloydConfig) -> Result<IncrementalRun> {
    incremental_run(dataset, k_max, Strategy::Fgkm { l }, &mut RngState::new(0), cfg, None)
}

fn check_l(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::Domain("number of candidates must be at least 1".into()));
    }
    Ok(())
}

/// Draws `l` distinct candidates without replacement from the D²
/// distribution of `d`. Drawn indices have their mass removed and the
/// remainder is renormalized before the next draw.
pub fn batch_sample(d: &NearestDistances, l: usize, rng: &mut RngState) -> Result<CandidateSet> {
    check_l(l)?;
    let p = d2_probabilities(d).map_err(|_| Error::EmptyCandidates)?;
    let mut residual = p.as_slice().to_vec();
    let positive = residual.iter().filter(|&&w| w > 0.0).count();
    let take = l.min(positive);
    let mut indices = Vec::with_capacity(take);
    for _ in 0..take {
        let total = compensated_sum(residual.iter().copied());
        let i = draw_weighted(&residual, total, rng);
        residual[i] = 0.0;
        indices.push(i);
    }
    Ok(CandidateSet { indices, shortfall: take < l })
}

/// Draws `l` candidates one at a time; after each draw the distances are
/// lowered as if the candidate were already a center. `d` itself is not
/// modified.
pub fn sequential_sample(
    dataset: &Dataset,
    d: &NearestDistances,
    l: usize,
    rng: &mut RngState,
) -> Result<CandidateSet> {
    check_l(l)?;
    if d.len() != dataset.n() {
        return Err(Error::LengthMismatch { expected: dataset.n(), found: d.len() });
    }
    let mut current = d.clone();
    let mut indices = Vec::with_capacity(l);
    let mut shortfall = false;
    for _ in 0..l {
        let p = match d2_probabilities(&current) {
            Ok(p) => p,
            Err(_) if indices.is_empty() => return Err(Error::EmptyCandidates),
            Err(_) => {
                shortfall = true;
                break;
            }
        };
        let c = sample_index(&p, rng);
        indices.push(c);
        let xc = dataset.point(c);
        let mut values = current.into_vec();
        for (v, x) in values.iter_mut().zip(dataset.rows()) {
            let dc = sq_dist(x, xc);
            if dc < *v {
                *v = dc;
            }
        }
        current = NearestDistances::from_vec_unchecked(values);
    }
    Ok(CandidateSet { indices, shortfall })
}

/// Global k-means++: per k, `l` candidates from the k-means++ distribution
/// of the converged (k-1) solution, one Lloyd run each, best kept.
///
/// With [`Sampler::Exhaustive`] all points are candidates (`l` is ignored)
/// and the result equals [`global_kmeans`].
pub fn global_kmeanspp(
    dataset: &Dataset,
    k_max: usize,
    l: usize,
    sampler: Sampler,
    rng: &mut RngState,
    cfg: &LloydConfig,
) -> Result<IncrementalRun> {
    incremental_run(dataset, k_max, Strategy::GlobalKmeansPP { l, sampler }, rng, cfg, None)
}
