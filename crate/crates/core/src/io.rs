//! CSV formats.
//!
//! - Real matrices: one row per line, plain decimals, no header.
//! - Complex matrices: one row per line, `re,im` pairs interleaved.
//! - Share bundles: a `k,N,T,pad_cols` line, then the `k` coefficient
//!   matrices in the complex layout, each `N` lines of `2T` values.
//! - Telemetry: headered rows, appended to existing files without a
//!   second header.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write followed by a read reproduces every value bit for bit.

use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::share::ShareBundle;

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_row(record: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: {f:?} is not a number")))
        })
        .collect()
}

pub fn read_matrix<R: Read>(r: R) -> Result<RealMatrix> {
    let mut rows = Vec::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(parse_row(&rec, i + 1)?);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse("matrix rows have different lengths".into()));
    }
    RealMatrix::from_rows(&rows)
}

pub fn write_matrix<W: Write>(w: W, m: &RealMatrix) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.rows() {
        out.write_record(m.row(i).iter().map(f64::to_string))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<RealMatrix> {
    read_matrix(std::fs::File::open(path)?)
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &RealMatrix) -> Result<()> {
    write_matrix(std::fs::File::create(path)?, m)
}

fn complex_record(row: &[Complex64]) -> Vec<String> {
    row.iter()
        .flat_map(|z| [z.re.to_string(), z.im.to_string()])
        .collect()
}

pub fn write_complex_matrix<W: Write>(w: W, m: &ComplexMatrix) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(w);
    for i in 0..m.rows() {
        out.write_record(complex_record(m.row(i)))?;
    }
    out.flush()?;
    Ok(())
}

fn complex_row(values: &[f64], line: usize) -> Result<Vec<Complex64>> {
    if !values.len().is_multiple_of(2) {
        return Err(Error::Parse(format!("line {line}: odd number of re/im values")));
    }
    Ok(values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

pub fn read_complex_matrix<R: Read>(r: R) -> Result<ComplexMatrix> {
    let mut rows = Vec::new();
    for (i, rec) in reader(r).records().enumerate() {
        rows.push(complex_row(&parse_row(&rec?, i + 1)?, i + 1)?);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("complex matrix rows have different lengths".into()));
    }
    ComplexMatrix::new(rows.len(), cols, rows.concat())
}

pub fn write_bundle<W: Write>(w: W, bundle: &ShareBundle) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(w);
    out.write_record([
        bundle.k().to_string(),
        bundle.n_rows().to_string(),
        bundle.block_cols().to_string(),
        bundle.pad_cols().to_string(),
    ])?;
    for c in bundle.coeffs() {
        for i in 0..c.rows() {
            out.write_record(complex_record(c.row(i)))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_bundle<R: Read>(r: R) -> Result<ShareBundle> {
    let mut records = reader(r).into_records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("bundle file is empty".into()))??;
    let dims: Vec<usize> = header
        .iter()
        .map(|f| f.parse().map_err(|_| Error::Parse(format!("bad header field {f:?}"))))
        .collect::<Result<_>>()?;
    let [k, n, t, pad] = dims[..] else {
        return Err(Error::Parse("bundle header must be k,N,T,pad_cols".into()));
    };
    let mut coeffs = Vec::with_capacity(k);
    let mut line = 1;
    for _ in 0..k {
        let mut data = Vec::with_capacity(n * t);
        for _ in 0..n {
            line += 1;
            let rec = records
                .next()
                .ok_or_else(|| Error::Parse(format!("bundle truncated at line {line}")))??;
            let row = complex_row(&parse_row(&rec, line)?, line)?;
            if row.len() != t {
                return Err(Error::Parse(format!(
                    "line {line}: expected {t} complex values, got {}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        coeffs.push(ComplexMatrix::new(n, t, data)?);
    }
    if records.next().is_some() {
        return Err(Error::Parse("trailing data after the last coefficient".into()));
    }
    ShareBundle::from_parts(coeffs, pad)
}

/// One simulated inversion run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TelemetryRow {
    pub run_id: u64,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub epsilon: f64,
    pub method: String,
    /// 1-based worker ids joined by `;`.
    pub responders: String,
    pub decode_online_ops: u64,
    pub err_l2: f64,
    #[serde(rename = "err_F")]
    pub err_f: f64,
    #[serde(rename = "err_rF")]
    pub err_rf: f64,
    pub wall_time_ms: f64,
}

/// Per-round traffic of a pseudoinverse run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRow {
    pub run_id: u64,
    pub round: usize,
    pub n: usize,
    pub k: usize,
    pub responders: String,
    pub symbols_sent: usize,
    pub symbols_received: usize,
}

/// `1;3;5` from 0-based ids.
pub fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

/// Appends `rows` to a CSV file, writing the header only when the file is
/// new or empty.
pub fn append_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `rows` with a header to any writer.
pub fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
