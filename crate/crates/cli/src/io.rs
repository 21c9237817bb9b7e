//! File formats.
//!
//! Matrices are headerless CSV, one row per line, decimal floats. A
//! `gamma_pst` tensor is either CSV, where each retained sample is a `p × p`
//! block preceded by a `# slice s` line, or flat binary: three little-endian
//! `u64` values `p, p, n_pst` followed by `p·p·n_pst` little-endian `f64`
//! entries, slice by slice, each slice row-major.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rgm::model::Indicator;
use rgm::sampler::GammaTensor;
use rgm::Matrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn parse_rows(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| anyhow!("row {}: cannot parse {field:?} as a number", line + 1))
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> anyhow::Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        bail!("no data");
    }
    if let Some(r) = rows.iter().position(|r| r.len() != cols) {
        bail!("row {} has {} fields, expected {cols}", r + 1, rows[r].len());
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Reads a headerless CSV matrix. Any failure is a usage error.
pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    parse_rows(path)
        .and_then(|rows| rows_to_matrix(&rows))
        .with_context(|| format!("reading matrix {}", path.display()))
        .map_err(CliError::usage)
}

fn to_indicator(m: &Matrix, what: &str) -> anyhow::Result<Indicator> {
    if m.iter().any(|&v| v != 0.0 && v != 1.0) {
        bail!("{what} must contain only 0 and 1");
    }
    Ok(m.map(|v| v as u8))
}

pub fn read_indicator(path: &Path) -> CliResult<Indicator> {
    let m = read_matrix(path)?;
    to_indicator(&m, &path.display().to_string()).map_err(CliError::usage)
}

/// Writes `values` as one CSV row per matrix row. `{}` formatting of `f64`
/// round-trips exactly.
pub fn write_matrix<T: std::fmt::Display + Copy>(
    path: &Path,
    rows: usize,
    cols: usize,
    at: impl Fn(usize, usize) -> T,
) -> CliResult<()> {
    let mut w = create(path)?;
    for i in 0..rows {
        let line: Vec<String> = (0..cols).map(|j| at(i, j).to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let f = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::runtime)?;
    Ok(BufWriter::new(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorFormat {
    Csv,
    Binary,
}

impl TensorFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Csv => "gamma_pst.csv",
            Self::Binary => "gamma_pst.bin",
        }
    }

    /// Binary when the extension is `.bin`, CSV otherwise.
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Self::Binary,
            _ => Self::Csv,
        }
    }
}

pub fn write_tensor(path: &Path, t: &GammaTensor, format: TensorFormat) -> CliResult<()> {
    let p = t.p();
    let mut w = create(path)?;
    let io = |e: std::io::Error| CliError::runtime(e);
    match format {
        TensorFormat::Csv => {
            for s in 0..t.len() {
                writeln!(w, "# slice {s}").map_err(io)?;
                for i in 0..p {
                    let line: Vec<String> = (0..p).map(|j| t.get(i, j, s).to_string()).collect();
                    writeln!(w, "{}", line.join(",")).map_err(io)?;
                }
            }
        }
        TensorFormat::Binary => {
            for v in [p, p, t.len()] {
                w.write_all(&(v as u64).to_le_bytes()).map_err(io)?;
            }
            for s in 0..t.len() {
                for i in 0..p {
                    for j in 0..p {
                        w.write_all(&f64::from(t.get(i, j, s)).to_le_bytes()).map_err(io)?;
                    }
                }
            }
        }
    }
    w.flush().map_err(io)
}

fn read_tensor_csv(path: &Path) -> anyhow::Result<GammaTensor> {
    let text = fs::read_to_string(path)?;
    let mut slices: Vec<Vec<Vec<f64>>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(marker) = line.strip_prefix('#') {
            if marker.trim_start().starts_with("slice") {
                slices.push(Vec::new());
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| anyhow!("line {}: bad entry {f:?}", n + 1)))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        slices
            .last_mut()
            .ok_or_else(|| anyhow!("line {}: data before the first slice marker", n + 1))?
            .push(row);
    }
    if slices.is_empty() {
        bail!("no slices");
    }
    let p = slices[0].len();
    let mut out = Vec::with_capacity(slices.len());
    for (s, rows) in slices.iter().enumerate() {
        let m = rows_to_matrix(rows).with_context(|| format!("slice {s}"))?;
        if m.shape() != (p, p) {
            bail!("slice {s} is {:?}, expected {p}×{p}", m.shape());
        }
        out.push(to_indicator(&m, &format!("slice {s}"))?);
    }
    Ok(GammaTensor::from_slices(p, &out)?)
}

fn read_tensor_binary(path: &Path) -> anyhow::Result<GammaTensor> {
    let bytes = fs::read(path)?;
    if bytes.len() < 24 {
        bail!("file shorter than its header");
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap()) as usize;
    let (p, q, n) = (word(0), word(1), word(2));
    if p != q {
        bail!("header declares {p}×{q} slices");
    }
    let expected = p
        .checked_mul(p)
        .and_then(|v| v.checked_mul(n))
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(24))
        .ok_or_else(|| anyhow!("header sizes overflow"))?;
    if bytes.len() != expected {
        bail!("expected {expected} bytes for {n} slices of {p}×{p}, found {}", bytes.len());
    }
    let mut t = GammaTensor::with_capacity(p, n);
    for s in 0..n {
        let base = 24 + s * p * p * 8;
        let m = Matrix::from_fn(p, p, |i, j| {
            let off = base + (i * p + j) * 8;
            f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
        });
        t.push(&to_indicator(&m, &format!("slice {s}"))?)?;
    }
    Ok(t)
}

pub fn read_tensor(path: &Path) -> CliResult<GammaTensor> {
    match TensorFormat::detect(path) {
        TensorFormat::Csv => read_tensor_csv(path),
        TensorFormat::Binary => read_tensor_binary(path),
    }
    .with_context(|| format!("reading tensor {}", path.display()))
    .map_err(CliError::usage)
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::runtime)
}

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn indicator_rows(m: &Indicator) -> Vec<Vec<u8>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
