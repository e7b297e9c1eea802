//! Dataset loading, min-max normalization and synthetic Gaussian blobs.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{CenterSet, Dataset};
use crate::seeding::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Char(char),
    /// Any run of spaces or tabs.
    Whitespace,
}

/// Column holding class labels, dropped on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub delimiter: Delimiter,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { delimiter: Delimiter::Char(','), has_header: false, label_column: None }
    }
}

/// Reads a delimited numeric matrix from `path`.
pub fn load_matrix(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_matrix(&text, options)
}

/// Parses delimited text. Blank lines are skipped; row numbers in errors
/// are 1-based line numbers.
pub fn parse_matrix(text: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut points = Vec::new();
    let mut width: Option<usize> = None;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    if options.has_header {
        lines.next();
    }
    for (lineno, line) in lines {
        let row = lineno + 1;
        let fields: Vec<&str> = match options.delimiter {
            Delimiter::Char(c) => line.split(c).map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        };
        let drop = match options.label_column {
            None => None,
            Some(LabelColumn::Index(i)) if i < fields.len() => Some(i),
            Some(LabelColumn::Index(i)) => {
                return Err(Error::Parse {
                    row,
                    message: format!("label column {i} missing ({} fields)", fields.len()),
                })
            }
            Some(LabelColumn::Last) => Some(fields.len() - 1),
        };
        let mut count = 0;
        for (col, field) in fields.iter().enumerate() {
            if Some(col) == drop {
                continue;
            }
            if field.is_empty() {
                return Err(Error::Parse { row, message: format!("missing value in column {col}") });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric value '{field}' in column {col}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, message: format!("non-finite value in column {col}") });
            }
            points.push(v);
            count += 1;
        }
        match width {
            None if count == 0 => return Err(Error::Parse { row, message: "row has no features".into() }),
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::Parse { row, message: format!("expected {w} features, found {count}") })
            }
            Some(_) => {}
        }
    }
    match width {
        None => Err(Error::EmptyDataset),
        Some(d) => Dataset::from_flat(points, d),
    }
}

/// Maps each attribute affinely onto `[0, 1]`. Constant attributes become 0.
pub fn minmax_normalize(dataset: &Dataset) -> Dataset {
    let d = dataset.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in dataset.rows() {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let flat = dataset
        .rows()
        .flat_map(|row| {
            row.iter().enumerate().map(|(j, &v)| {
                let range = hi[j] - lo[j];
                if range > 0.0 {
                    (v - lo[j]) / range
                } else {
                    0.0
                }
            })
        })
        .collect();
    Dataset::from_flat(flat, d).expect("normalized values are finite")
}

/// Parameters of an isotropic Gaussian mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub d: usize,
    /// Standard deviation of every coordinate around its cluster center.
    pub spread: f64,
    /// Cluster centers are uniform in `[0, box_size]^d`.
    pub box_size: f64,
}

#[derive(Debug, Clone)]
pub struct Blobs {
    pub dataset: Dataset,
    pub labels: Vec<usize>,
    pub centers: CenterSet,
}

/// Draws `n_clusters * points_per_cluster` points, cluster by cluster.
pub fn gen_gaussian_blobs(spec: &BlobSpec, seed: u64) -> Result<Blobs> {
    if spec.n_clusters == 0 || spec.points_per_cluster == 0 || spec.d == 0 {
        return Err(Error::Domain("blob counts and dimension must be at least 1".into()));
    }
    if !(spec.spread > 0.0 && spec.spread.is_finite()) || !(spec.box_size >= 0.0 && spec.box_size.is_finite()) {
        return Err(Error::Domain("spread must be positive and box size non-negative".into()));
    }
    let mut rng = RngState::new(seed);
    let centers: Vec<f64> = (0..spec.n_clusters * spec.d).map(|_| rng.uniform() * spec.box_size).collect();
    let mut points = Vec::with_capacity(spec.n_clusters * spec.points_per_cluster * spec.d);
    let mut labels = Vec::with_capacity(spec.n_clusters * spec.points_per_cluster);
    for (c, center) in centers.chunks_exact(spec.d).enumerate() {
        for _ in 0..spec.points_per_cluster {
            for &m in center {
                let z: f64 = rng.sample(StandardNormal);
                points.push(m + spec.spread * z);
            }
            labels.push(c);
        }
    }
    Ok(Blobs {
        dataset: Dataset::from_flat(points, spec.d)?,
        labels,
        centers: CenterSet::from_flat(centers, spec.d)?,
    })
}
