//! Randomized initialization: uniform seeding, the k-means++ D² distribution
//! and full k-means++ seeding.
//!
//! All randomness flows through [`RngState`], a ChaCha8 stream seeded from a
//! `u64`. ChaCha8 output is specified independently of platform and word
//! size, so a seed names the same draw sequence everywhere.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{compensated_sum, sq_dist, CenterSet, Dataset, NearestDistances};

/// Single-owner random stream.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream `stream` under the same seed. Substreams never
    /// overlap the parent stream (stream 0) or each other.
    pub fn substream(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        Self { seed: self.seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Raw 64-bit draw, e.g. to seed a derived stream.
    pub fn next_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Categorical distribution over datapoint indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Normalizes non-negative weights. Fails if they sum to zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("weights must be finite and non-negative".into()));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::DegenerateDistribution);
        }
        Ok(Self(weights.iter().map(|w| w / total).collect()))
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
}

/// k-means++ probabilities `p_i = d_i / sum_j d_j`.
pub fn d2_probabilities(d: &NearestDistances) -> Result<ProbabilityVector> {
    ProbabilityVector::from_weights(d.as_slice())
}

/// Inverse-CDF draw from unnormalized `weights` summing to `total`.
/// Zero-weight indices are never returned; `total` must be positive.
pub(crate) fn draw_weighted(weights: &[f64], total: f64, rng: &mut RngState) -> usize {
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = usize::MAX;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    // rounding left the target just above the accumulated mass
    debug_assert!(last_positive != usize::MAX);
    last_positive
}

/// Draws one index with probability `p_i` from a single uniform variate.
pub fn sample_index(p: &ProbabilityVector, rng: &mut RngState) -> usize {
    let total = compensated_sum(p.0.iter().copied());
    draw_weighted(&p.0, total, rng)
}

fn check_k(dataset: &Dataset, k: usize) -> Result<()> {
    if k == 0 || k > dataset.n() {
        return Err(Error::Domain(format!(
            "number of centers must lie in 1..={} (got {k})",
            dataset.n()
        )));
    }
    Ok(())
}

/// `k` distinct datapoints chosen uniformly without replacement.
pub fn uniform_seed(dataset: &Dataset, k: usize, rng: &mut RngState) -> Result<CenterSet> {
    check_k(dataset, k)?;
    let mut idx: Vec<usize> = (0..dataset.n()).collect();
    for i in 0..k {
        let j = i + rng.below(dataset.n() - i);
        idx.swap(i, j);
    }
    Ok(CenterSet::from_points(dataset, &idx[..k]))
}

/// k-means++ seeding; returns the chosen point indices in draw order.
///
/// Once every remaining point coincides with a chosen center, the rest
/// are picked uniformly from the points not yet chosen.
pub fn kmeanspp_indices(dataset: &Dataset, k: usize, rng: &mut RngState) -> Result<Vec<usize>> {
    check_k(dataset, k)?;
    let first = rng.below(dataset.n());
    let mut chosen = vec![first];
    let mut taken = vec![false; dataset.n()];
    taken[first] = true;
    let mut d: Vec<f64> = dataset.rows().map(|x| sq_dist(x, dataset.point(first))).collect();

    while chosen.len() < k {
        let total = compensated_sum(d.iter().copied());
        let next = if total > 0.0 {
            draw_weighted(&d, total, rng)
        } else {
            let free: Vec<usize> = (0..dataset.n()).filter(|&i| !taken[i]).collect();
            free[rng.below(free.len())]
        };
        taken[next] = true;
        chosen.push(next);
        let c = dataset.point(next);
        for (di, x) in d.iter_mut().zip(dataset.rows()) {
            let dc = sq_dist(x, c);
            if dc < *di {
                *di = dc;
            }
        }
    }
    Ok(chosen)
}

/// k-means++ seeding: first center uniform, each further center drawn from
/// the D² distribution against all centers chosen so far.
pub fn kmeanspp_seed(dataset: &Dataset, k: usize, rng: &mut RngState) -> Result<CenterSet> {
    let idx = kmeanspp_indices(dataset, k, rng)?;
    Ok(CenterSet::from_points(dataset, &idx))
}
