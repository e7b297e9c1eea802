//! Global k-means++ and the incremental k-means family.
//!
//! The crate provides the k-means building blocks ([`lloyd`], [`seeding`]),
//! the incremental solvers ([`incremental`]): global k-means, fast global
//! k-means and global k-means++, plus comparison metrics ([`evaluation`])
//! and data preparation ([`ingestion`]).
//!
//! Distances are squared Euclidean throughout. Every randomized routine
//! takes an explicit [`RngState`] so runs are reproducible from a seed.

pub mod error;
pub mod evaluation;
pub mod incremental;
pub mod ingestion;
pub mod lloyd;
pub mod model;
pub mod seeding;

pub use error::{Error, Result};
pub use evaluation::{aggregate_iterations, error_difference, percentage_error};
pub use incremental::{
    batch_sample, fgkm, fgkm_bounds, fgkm_bounds_blocked, global_kmeans, global_kmeanspp, incremental_run,
    sequential_sample, solve_k1, CandidateSet, IncrementalRun, KStats, Sampler, Strategy,
};
pub use ingestion::{gen_gaussian_blobs, load_matrix, minmax_normalize, BlobSpec, Blobs, Delimiter, LabelColumn, LoadOptions};
pub use lloyd::{assign, run_lloyd, run_lloyd_traced, update_centers, LloydConfig};
pub use model::{
    clustering_error, stirling2, Assignment, CenterSet, ClusteringSolution, Dataset, NearestDistances,
};
pub use seeding::{
    d2_probabilities, kmeanspp_indices, kmeanspp_seed, sample_index, uniform_seed, ProbabilityVector, RngState,
};
