//! Matrix and vector files.
//!
//! Two formats are supported:
//!
//! * CSV, one observation per row, optional header row (detected when the
//!   first record does not parse as numbers).
//! * Raw binary: an 8-byte little-endian header `u32 n, u32 p` followed by
//!   `n·p` little-endian `f64` values in row-major order.
//!
//! The format is chosen from the file extension: `.csv` / `.txt` are CSV,
//! anything else is binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                MatrixFormat::Csv
            }
            _ => MatrixFormat::Binary,
        }
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a raw matrix (no normalization).
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => read_csv(path),
        MatrixFormat::Binary => read_binary(path),
    }
}

/// Reads a design matrix; columns off unit norm are re-normalized.
pub fn read_design(path: &Path) -> Result<DesignMatrix> {
    DesignMatrix::from_loaded(read_matrix(path)?)
}

/// Reads a vector stored as a one-column (or one-row) matrix.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() == 1 || m.nrows() == 1 {
        Ok(m.iter().copied().collect())
    } else {
        Err(parse_err(
            path,
            format!("expected a vector, found a {}x{} matrix", m.nrows(), m.ncols()),
        ))
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => write_csv(path, m),
        MatrixFormat::Binary => write_binary(path, m),
    }
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v))
}

fn read_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue, // header
            Err(e) => return Err(parse_err(path, format!("line {}: {e}", line + 1))),
        }
    }
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(parse_err(path, "empty matrix"));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != p) {
        return Err(parse_err(
            path,
            format!("row {bad} has {} fields, expected {p}", rows[bad].len()),
        ));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn write_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn read_binary(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 8];
    reader
        .read_exact(&mut header)
        .map_err(|_| parse_err(path, "truncated header"))?;
    let n = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let p = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    if n == 0 || p == 0 {
        return Err(parse_err(path, format!("invalid dimensions {n}x{p}")));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != n * p * 8 {
        return Err(parse_err(
            path,
            format!("payload has {} bytes, expected {}", bytes.len(), n * p * 8),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(n, p, &values))
}

fn write_binary(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let n = u32::try_from(m.nrows()).map_err(|_| Error::invalid("too many rows"))?;
    let p = u32::try_from(m.ncols()).map_err(|_| Error::invalid("too many columns"))?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&p.to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}
