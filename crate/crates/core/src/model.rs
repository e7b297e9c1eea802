//! Shared data types and the clustering-error functional.
//!
//! Points and centers are stored row-major in flat `Vec<f64>` buffers. All
//! distances in this crate are squared Euclidean distances.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Largest `n` accepted by [`stirling2`].
pub const STIRLING_MAX_N: usize = 64;

/// Immutable `n x d` matrix of finite datapoints, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer with `d` columns.
    pub fn from_flat(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimensionality must be at least 1".into()));
        }
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if points.len() % d != 0 {
            return Err(Error::LengthMismatch {
                expected: (points.len() / d + 1) * d,
                found: points.len(),
            });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / d, col: pos % d });
        }
        let n = points.len() / d;
        Ok(Self { points, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let d = first.as_ref().len();
        let mut points = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            points.extend_from_slice(row);
        }
        Self::from_flat(points, d)
    }

    /// Convenience constructor for one-dimensional data.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// Per-attribute mean, accumulated in point order.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![Neumaier::default(); self.d];
        for row in self.rows() {
            for (a, &v) in acc.iter_mut().zip(row) {
                a.add(v);
            }
        }
        acc.into_iter().map(|a| a.total() / self.n as f64).collect()
    }
}

/// Ordered list of `k` centers; center `j` owns cluster `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    centers: Vec<f64>,
    k: usize,
    d: usize,
}

impl CenterSet {
    pub fn from_flat(centers: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || centers.is_empty() {
            return Err(Error::Domain("a center set needs at least one center of dimension >= 1".into()));
        }
        if centers.len() % d != 0 {
            return Err(Error::LengthMismatch {
                expected: (centers.len() / d + 1) * d,
                found: centers.len(),
            });
        }
        if let Some(pos) = centers.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / d, col: pos % d });
        }
        let k = centers.len() / d;
        Ok(Self { centers, k, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Domain("no centers given".into()))?;
        let d = first.as_ref().len();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(flat, d)
    }

    /// Centers placed at the given datapoints, in the given order.
    pub fn from_points(dataset: &Dataset, indices: &[usize]) -> Self {
        let mut flat = Vec::with_capacity(indices.len() * dataset.d());
        for &i in indices {
            flat.extend_from_slice(dataset.point(i));
        }
        Self { centers: flat, k: indices.len(), d: dataset.d() }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.d..(j + 1) * self.d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.centers.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.centers
    }

    /// Returns a new set with `center` appended as index `k`.
    pub fn with_center(&self, center: &[f64]) -> Self {
        debug_assert_eq!(center.len(), self.d);
        let mut flat = Vec::with_capacity(self.centers.len() + self.d);
        flat.extend_from_slice(&self.centers);
        flat.extend_from_slice(center);
        Self { centers: flat, k: self.k + 1, d: self.d }
    }

    pub(crate) fn center_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.centers[j * self.d..(j + 1) * self.d]
    }
}

/// Cluster index of every point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    labels: Vec<usize>,
}

impl Assignment {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Checks every label against `k` and the length against `n`.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: self.labels.len() });
        }
        match self.labels.iter().position(|&l| l >= k) {
            Some(index) => Err(Error::InvalidLabel { index, label: self.labels[index], k }),
            None => Ok(()),
        }
    }
}

/// Squared distance of every point to its nearest current center.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestDistances(Vec<f64>);

impl NearestDistances {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!(
                "nearest distance {pos} is not a finite non-negative value"
            )));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Compensated sum in index order.
    pub fn total(&self) -> f64 {
        compensated_sum(self.0.iter().copied())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Result of one k-means run for a fixed number of clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSolution {
    pub centers: CenterSet,
    pub assignment: Assignment,
    /// Squared distance of each point to its assigned center.
    pub distances: NearestDistances,
    pub error: f64,
    /// Number of assign/update passes executed.
    pub iterations: usize,
}

impl ClusteringSolution {
    pub fn k(&self) -> usize {
        self.centers.k()
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Sum of squared distances of every point to the center named by its label.
pub fn clustering_error(dataset: &Dataset, centers: &CenterSet, assignment: &Assignment) -> Result<f64> {
    if dataset.d() != centers.d() {
        return Err(Error::DimensionMismatch { expected: dataset.d(), found: centers.d() });
    }
    assignment.validate(dataset.n(), centers.k())?;
    Ok(compensated_sum(
        dataset
            .rows()
            .zip(assignment.labels())
            .map(|(x, &j)| sq_dist(x, centers.center(j))),
    ))
}

/// Stirling number of the second kind `S(n, k)`: the number of ways to
/// partition `n` objects into `k` non-empty groups.
///
/// Uses the recurrence `S(n, k) = k S(n-1, k) + S(n-1, k-1)` so that no
/// cancellation occurs. `n` is capped at [`STIRLING_MAX_N`].
pub fn stirling2(n: usize, k: usize) -> Result<BigUint> {
    if k > n {
        return Err(Error::Domain(format!("stirling2 requires k <= n (got n={n}, k={k})")));
    }
    if n > STIRLING_MAX_N {
        return Err(Error::Domain(format!("stirling2 supports n <= {STIRLING_MAX_N} (got {n})")));
    }
    // row[j] holds S(m, j) for the current m
    let mut row = vec![BigUint::from(0u32); k + 1];
    row[0] = BigUint::from(1u32);
    for _ in 0..n {
        for j in (1..=k).rev() {
            let carried = std::mem::take(&mut row[j]) * BigUint::from(j);
            row[j] = carried + &row[j - 1];
        }
        row[0] = BigUint::from(0u32);
    }
    Ok(row.swap_remove(k))
}
