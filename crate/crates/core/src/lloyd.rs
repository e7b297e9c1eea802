//! Lloyd's local search: nearest-center assignment alternated with the
//! mean update until convergence.

use crate::error::{Error, Result};
use crate::model::{
    sq_dist, Assignment, CenterSet, ClusteringSolution, Dataset, NearestDistances, Neumaier,
};

/// Floor on the denominator of the relative-decrease test.
const REL_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydConfig {
    /// Stop once `(E_t - E_{t+1}) / max(E_t, 1e-300)` drops below this.
    pub tol: f64,
    /// Upper bound on assign/update passes.
    pub max_iter: usize,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 300 }
    }
}

impl LloydConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::Domain(format!("tolerance must be finite and >= 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_dims(dataset: &Dataset, centers: &CenterSet) -> Result<()> {
    if dataset.d() != centers.d() {
        return Err(Error::DimensionMismatch { expected: dataset.d(), found: centers.d() });
    }
    Ok(())
}

/// Index and squared distance of the nearest center; ties go to the lower index.
#[inline]
pub(crate) fn nearest(x: &[f64], centers: &CenterSet) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = sq_dist(x, centers.center(0));
    for j in 1..centers.k() {
        let dj = sq_dist(x, centers.center(j));
        if dj < best_d {
            best = j;
            best_d = dj;
        }
    }
    (best, best_d)
}

pub(crate) fn assign_unchecked(dataset: &Dataset, centers: &CenterSet) -> (Assignment, NearestDistances) {
    let mut labels = Vec::with_capacity(dataset.n());
    let mut dists = Vec::with_capacity(dataset.n());
    for x in dataset.rows() {
        let (j, dj) = nearest(x, centers);
        labels.push(j);
        dists.push(dj);
    }
    (Assignment::new(labels), NearestDistances::from_vec_unchecked(dists))
}

/// Assigns every point to its nearest center.
pub fn assign(dataset: &Dataset, centers: &CenterSet) -> Result<(Assignment, NearestDistances)> {
    check_dims(dataset, centers)?;
    Ok(assign_unchecked(dataset, centers))
}

/// Per-cluster means, or `None` for clusters without points.
fn cluster_means(dataset: &Dataset, labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let d = dataset.d();
    let mut sums = vec![Neumaier::default(); k * d];
    let mut counts = vec![0usize; k];
    for (x, &j) in dataset.rows().zip(labels) {
        counts[j] += 1;
        for (s, &v) in sums[j * d..(j + 1) * d].iter_mut().zip(x) {
            s.add(v);
        }
    }
    counts
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            (c > 0).then(|| sums[j * d..(j + 1) * d].iter().map(|s| s.total() / c as f64).collect())
        })
        .collect()
}

/// Recomputes each center as the mean of its points.
///
/// Returns the new centers together with the indices of clusters that
/// received no points. Rows of empty clusters are zero placeholders; the
/// caller decides where an empty center goes ([`run_lloyd`] keeps it at its
/// previous position).
pub fn update_centers(dataset: &Dataset, assignment: &Assignment, k: usize) -> Result<(CenterSet, Vec<usize>)> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    assignment.validate(dataset.n(), k)?;
    let mut flat = Vec::with_capacity(k * dataset.d());
    let mut empty = Vec::new();
    for (j, mean) in cluster_means(dataset, assignment.labels(), k).into_iter().enumerate() {
        match mean {
            Some(m) => flat.extend(m),
            None => {
                empty.push(j);
                flat.extend(std::iter::repeat(0.0).take(dataset.d()));
            }
        }
    }
    Ok((CenterSet::from_flat(flat, dataset.d())?, empty))
}

fn update_keeping_empty(dataset: &Dataset, labels: &[usize], previous: &CenterSet) -> CenterSet {
    let mut next = previous.clone();
    for (j, mean) in cluster_means(dataset, labels, previous.k()).into_iter().enumerate() {
        if let Some(m) = mean {
            next.center_mut(j).copy_from_slice(&m);
        }
    }
    next
}

fn bitwise_eq(a: &CenterSet, b: &CenterSet) -> bool {
    a.as_flat().iter().zip(b.as_flat()).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Runs k-means from `initial_centers` until convergence.
pub fn run_lloyd(dataset: &Dataset, initial_centers: &CenterSet, cfg: &LloydConfig) -> Result<ClusteringSolution> {
    check_dims(dataset, initial_centers)?;
    cfg.validate()?;
    let (labels, dists) = assign_unchecked(dataset, initial_centers);
    Ok(lloyd_from_assignment(dataset, initial_centers.clone(), labels, dists, cfg, None))
}

/// Like [`run_lloyd`], also returning the error after every assignment
/// pass (the first entry is the error of the initial centers).
pub fn run_lloyd_traced(
    dataset: &Dataset,
    initial_centers: &CenterSet,
    cfg: &LloydConfig,
) -> Result<(ClusteringSolution, Vec<f64>)> {
    check_dims(dataset, initial_centers)?;
    cfg.validate()?;
    let (labels, dists) = assign_unchecked(dataset, initial_centers);
    let mut trace = Vec::new();
    let sol = lloyd_from_assignment(dataset, initial_centers.clone(), labels, dists, cfg, Some(&mut trace));
    Ok((sol, trace))
}

/// Core loop, starting from centers whose nearest-center assignment is
/// already known.
pub(crate) fn lloyd_from_assignment(
    dataset: &Dataset,
    mut centers: CenterSet,
    mut labels: Assignment,
    mut dists: NearestDistances,
    cfg: &LloydConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> ClusteringSolution {
    let mut error = dists.total();
    if let Some(t) = trace.as_deref_mut() {
        t.push(error);
    }
    let mut iterations = 0;
    loop {
        let next = update_keeping_empty(dataset, labels.labels(), &centers);
        iterations += 1;
        if bitwise_eq(&next, &centers) {
            break;
        }
        let (next_labels, next_dists) = assign_unchecked(dataset, &next);
        let next_error = next_dists.total();
        if let Some(t) = trace.as_deref_mut() {
            t.push(next_error);
        }
        let decrease = (error - next_error) / error.max(REL_EPS);
        centers = next;
        labels = next_labels;
        dists = next_dists;
        error = next_error;
        if decrease < cfg.tol || iterations >= cfg.max_iter {
            break;
        }
    }
    ClusteringSolution { centers, assignment: labels, distances: dists, error, iterations }
}
