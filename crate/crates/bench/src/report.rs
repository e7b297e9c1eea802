//! Report rows and their CSV / JSON serializations.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::BenchError;

/// Exact CSV header.
pub const CSV_HEADER: [&str; 9] = ["method", "L", "seed", "k", "error", "pe", "err_diff", "mean_iters", "wall_ms"];

/// Significant digits for real-valued CSV fields.
const SIG_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub seed: u64,
    pub k: usize,
    pub error: f64,
    /// Percentage error against the baseline method at the same k.
    pub pe: Option<f64>,
    /// Gap to the best error at the same (seed, k).
    pub err_diff: f64,
    pub mean_iters: f64,
    pub wall_ms: Option<f64>,
}

/// Timing of one full method sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub method: String,
    pub l: usize,
    pub seed: u64,
    pub wall_ms: f64,
    pub k_reached: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub sweeps: Vec<SweepSummary>,
}

/// Formats with `digits` significant digits, `%g` style: plain notation
/// for moderate exponents, scientific otherwise, trailing zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_fields(row: &ReportRow) -> [String; 9] {
    [
        row.method.clone(),
        row.l.to_string(),
        row.seed.to_string(),
        row.k.to_string(),
        format_sig(row.error, SIG_DIGITS),
        row.pe.map(|v| format_sig(v, SIG_DIGITS)).unwrap_or_default(),
        format_sig(row.err_diff, SIG_DIGITS),
        format_sig(row.mean_iters, SIG_DIGITS),
        row.wall_ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(csv_fields(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| BenchError::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| BenchError::Parse(e.to_string()))?;
        let bad = |field: &str| BenchError::Parse(format!("row {}: bad {field}", i + 2));
        let num = |j: usize, name: &str| rec[j].parse::<f64>().map_err(|_| bad(name));
        let opt = |j: usize, name: &str| {
            if rec[j].is_empty() {
                Ok(None)
            } else {
                rec[j].parse::<f64>().map(Some).map_err(|_| bad(name))
            }
        };
        rows.push(ReportRow {
            method: rec[0].to_string(),
            l: rec[1].parse().map_err(|_| bad("L"))?,
            seed: rec[2].parse().map_err(|_| bad("seed"))?,
            k: rec[3].parse().map_err(|_| bad("k"))?,
            error: num(4, "error")?,
            pe: opt(5, "pe")?,
            err_diff: num(6, "err_diff")?,
            mean_iters: num(7, "mean_iters")?,
            wall_ms: opt(8, "wall_ms")?,
        });
    }
    Ok(rows)
}

/// Writes the report rows to `path` (`-` for stdout).
pub fn emit_report(report: &ExperimentReport, format: OutputFormat, path: &Path) -> Result<(), BenchError> {
    let io_err = |e: &dyn std::fmt::Display| BenchError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut out: Box<dyn Write> = if path.as_os_str() == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| io_err(&e))?))
    };
    match format {
        OutputFormat::Csv => write_csv(&report.rows, &mut out).map_err(|e| io_err(&e))?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &report.rows).map_err(|e| io_err(&e))?;
            writeln!(out).map_err(|e| io_err(&e))?;
        }
    }
    out.flush().map_err(|e| io_err(&e))
}
