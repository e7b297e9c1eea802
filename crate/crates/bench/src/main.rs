use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{ArgGroup, Parser, ValueEnum};
use gkmpp::{Delimiter, LabelColumn, LloydConfig, LoadOptions, Sampler};
use gkmpp_bench::{emit_report, run_experiment, BlobsArg, ExperimentConfig, InputSource, Method, OutputFormat};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Normalize {
    Minmax,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SamplerArg {
    Batch,
    Sequential,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Sweep k-means variants over k = 1..=K and report clustering errors.
#[derive(Debug, Parser)]
#[command(name = "gkmpp-bench", version)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "blobs"])))]
struct Cli {
    /// Delimited numeric data file.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,

    /// Synthetic Gaussian blobs, e.g. `clusters=15,points=40,dim=2,spread=0.5,box=20,seed=1`.
    #[arg(long, value_name = "SPEC")]
    blobs: Option<BlobsArg>,

    /// Field delimiter of --input: a single character, `tab` or `whitespace`.
    #[arg(long, default_value = ",")]
    delimiter: String,

    /// Skip the first line of --input.
    #[arg(long)]
    header: bool,

    /// Column of --input holding class labels (0-based index or `last`); dropped.
    #[arg(long, value_name = "COL")]
    label_column: Option<String>,

    #[arg(long, value_enum, default_value = "minmax")]
    normalize: Normalize,

    #[arg(long, default_value_t = 30)]
    k_max: usize,

    /// Comma-separated subset of global, gkmpp-batch, gkmpp-seq, fgkm, kmeanspp, random.
    #[arg(long, value_delimiter = ',', default_value = "global,gkmpp-batch,gkmpp-seq,fgkm,kmeanspp,random")]
    methods: Vec<Method>,

    /// Candidate counts L (restart counts for kmeanspp and random).
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100")]
    candidates: Vec<usize>,

    /// Fixed restart count for kmeanspp and random, overriding --candidates.
    #[arg(long)]
    restarts: Option<usize>,

    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,

    /// Relative error-decrease threshold for Lloyd convergence.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    #[arg(long, default_value_t = 300)]
    max_iter: usize,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,

    /// Force the candidate sampler of gkmpp-batch and gkmpp-seq.
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,

    /// Reference method for the pe column (default: global when run).
    #[arg(long)]
    baseline: Option<Method>,

    /// Soft time cap per method sweep; remaining k are dropped once exceeded.
    #[arg(long, value_name = "SECONDS")]
    budget_seconds: Option<f64>,

    /// Leave wall_ms empty so the output is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,

    /// Output file, `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn parse_delimiter(s: &str) -> anyhow::Result<Delimiter> {
    Ok(match s {
        "whitespace" | "ws" => Delimiter::Whitespace,
        "tab" | "\\t" => Delimiter::Char('\t'),
        "comma" => Delimiter::Char(','),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Delimiter::Char(c),
                _ => bail!("delimiter must be a single character, `tab` or `whitespace`, got '{s}'"),
            }
        }
    })
}

fn parse_label_column(s: &str) -> anyhow::Result<LabelColumn> {
    if s == "last" {
        return Ok(LabelColumn::Last);
    }
    Ok(LabelColumn::Index(s.parse().with_context(|| format!("bad label column '{s}'"))?))
}

fn build_config(cli: Cli) -> anyhow::Result<(ExperimentConfig, OutputFormat, PathBuf)> {
    let input = match (cli.input, cli.blobs) {
        (Some(path), None) => InputSource::File {
            path,
            options: LoadOptions {
                delimiter: parse_delimiter(&cli.delimiter)?,
                has_header: cli.header,
                label_column: cli.label_column.as_deref().map(parse_label_column).transpose()?,
            },
        },
        (None, Some(b)) => InputSource::Blobs(b),
        _ => bail!("exactly one of --input or --blobs is required"),
    };
    let budget = match cli.budget_seconds {
        Some(s) if !(s >= 0.0 && s.is_finite()) => bail!("--budget-seconds must be a non-negative number"),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    let config = ExperimentConfig {
        input,
        normalize: matches!(cli.normalize, Normalize::Minmax),
        k_max: cli.k_max,
        methods: cli.methods,
        candidates: cli.candidates,
        restarts: cli.restarts,
        seeds: cli.seeds,
        lloyd: LloydConfig { tol: cli.tol, max_iter: cli.max_iter },
        workers: cli
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        sampler: cli.sampler.map(|s| match s {
            SamplerArg::Batch => Sampler::Batch,
            SamplerArg::Sequential => Sampler::Sequential,
            SamplerArg::Exhaustive => Sampler::Exhaustive,
        }),
        baseline: cli.baseline,
        budget,
        record_timing: !cli.no_timing,
    };
    let format = match cli.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    Ok((config, format, cli.out))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (config, format, out) = build_config(cli)?;
    let report = run_experiment(&config)?;
    for s in &report.sweeps {
        eprintln!(
            "{:<12} L={:<4} seed={:<4} k=1..{:<3} {:>12.3} ms{}",
            s.method,
            s.l,
            s.seed,
            s.k_reached,
            s.wall_ms,
            if s.truncated { " (truncated by budget)" } else { "" }
        );
    }
    emit_report(&report, format, &out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
