//! Benchmark harness for the incremental k-means family.
//!
//! [`run_experiment`] sweeps every configured method over k = 1..=K and
//! produces one report row per (method, L, seed, k); [`emit_report`] writes
//! the rows as CSV or JSON.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{BlobsArg, ExperimentConfig, InputSource, Method, OutputFormat};
pub use experiment::{restart_sweep, run_experiment, RestartInit};
pub use report::{emit_report, read_csv, to_csv_string, write_csv, ExperimentReport, ReportRow, SweepSummary, CSV_HEADER};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to load input: {0}")]
    Input(#[source] gkmpp::Error),

    #[error("{method} (L={l}, seed={seed}{}) failed: {source}", .k.map(|k| format!(", k={k}")).unwrap_or_default())]
    Run {
        method: String,
        l: usize,
        seed: u64,
        k: Option<usize>,
        #[source]
        source: gkmpp::Error,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed report: {0}")]
    Parse(String),
}
