use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use gkmpp::{BlobSpec, Dataset, LloydConfig, LoadOptions, Sampler};

use crate::BenchError;

/// Clustering methods the harness can sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Global,
    GkmppBatch,
    GkmppSeq,
    Fgkm,
    KmeansPP,
    Random,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Global, Method::GkmppBatch, Method::GkmppSeq, Method::Fgkm, Method::KmeansPP, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Global => "global",
            Method::GkmppBatch => "gkmpp-batch",
            Method::GkmppSeq => "gkmpp-seq",
            Method::Fgkm => "fgkm",
            Method::KmeansPP => "kmeanspp",
            Method::Random => "random",
        }
    }

    /// Baselines restart from scratch for every k instead of building on
    /// the previous solution.
    pub fn is_restart_baseline(self) -> bool {
        matches!(self, Method::KmeansPP | Method::Random)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method '{s}' (expected one of {})", names.join(", "))
            })
    }
}

/// `--blobs` argument: comma-separated `key=value` pairs, e.g.
/// `clusters=15,points=40,dim=2,spread=0.5,box=20,seed=1`. Missing keys
/// take the defaults below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobsArg {
    pub spec: BlobSpec,
    pub seed: u64,
}

impl Default for BlobsArg {
    fn default() -> Self {
        Self {
            spec: BlobSpec { n_clusters: 15, points_per_cluster: 40, d: 2, spread: 1.0, box_size: 50.0 },
            seed: 0,
        }
    }
}

impl FromStr for BlobsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut arg = BlobsArg::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| format!("expected key=value, got '{part}'"))?;
            let bad = |e: &dyn fmt::Display| format!("bad value for {key}: {e}");
            match key.trim() {
                "clusters" => arg.spec.n_clusters = value.parse().map_err(|e| bad(&e))?,
                "points" => arg.spec.points_per_cluster = value.parse().map_err(|e| bad(&e))?,
                "dim" => arg.spec.d = value.parse().map_err(|e| bad(&e))?,
                "spread" => arg.spec.spread = value.parse().map_err(|e| bad(&e))?,
                "box" => arg.spec.box_size = value.parse().map_err(|e| bad(&e))?,
                "seed" => arg.seed = value.parse().map_err(|e| bad(&e))?,
                other => return Err(format!("unknown blob key '{other}'")),
            }
        }
        Ok(arg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File { path: PathBuf, options: LoadOptions },
    Blobs(BlobsArg),
    /// Already loaded data, for library callers.
    InMemory(Dataset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: InputSource,
    pub normalize: bool,
    pub k_max: usize,
    pub methods: Vec<Method>,
    /// Candidate counts L. For restart baselines L is the restart count
    /// unless `restarts` overrides it.
    pub candidates: Vec<usize>,
    pub restarts: Option<usize>,
    pub seeds: Vec<u64>,
    pub lloyd: LloydConfig,
    pub workers: usize,
    /// Forces the sampler of both global k-means++ methods.
    pub sampler: Option<Sampler>,
    /// Reference method for the percentage error column. Defaults to
    /// global k-means when it is among the methods.
    pub baseline: Option<Method>,
    /// Soft cap on each method sweep; later k are dropped once exceeded.
    pub budget: Option<Duration>,
    /// When false the wall time column is left empty, making the report a
    /// pure function of the configuration.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(input: InputSource) -> Self {
        Self {
            input,
            normalize: false,
            k_max: 30,
            methods: vec![Method::Global, Method::GkmppBatch],
            candidates: vec![25],
            restarts: None,
            seeds: vec![0],
            lloyd: LloydConfig::default(),
            workers: 1,
            sampler: None,
            baseline: None,
            budget: None,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.k_max < 2 {
            return fail("--k-max must be at least 2");
        }
        if self.methods.is_empty() {
            return fail("at least one method is required");
        }
        if self.candidates.is_empty() || self.candidates.contains(&0) {
            return fail("candidate counts must be non-empty and >= 1");
        }
        if self.restarts == Some(0) {
            return fail("--restarts must be >= 1");
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        if self.workers == 0 {
            return fail("--workers must be >= 1");
        }
        self.lloyd.validate().map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Effective PE reference method, if any.
    pub fn baseline_method(&self) -> Option<Method> {
        self.baseline.or_else(|| self.methods.contains(&Method::Global).then_some(Method::Global))
    }

    pub fn load_dataset(&self) -> Result<Dataset, BenchError> {
        let raw = match &self.input {
            InputSource::File { path, options } => gkmpp::load_matrix(path, options).map_err(BenchError::Input)?,
            InputSource::Blobs(b) => gkmpp::gen_gaussian_blobs(&b.spec, b.seed).map_err(BenchError::Input)?.dataset,
            InputSource::InMemory(d) => d.clone(),
        };
        Ok(if self.normalize { gkmpp::minmax_normalize(&raw) } else { raw })
    }
}
