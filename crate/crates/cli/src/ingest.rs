//! CSV ingestion and preprocessing.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use ggmsel_core::simulate::DataMatrix;
use ggmsel_core::SymMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("ParseError at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },
    #[error("NonNumeric value {value:?} at row {row}, column {col}")]
    NonNumeric { row: usize, col: usize, value: String },
    #[error("TooFewRows: need at least 2 data rows, found {rows}")]
    TooFewRows { rows: usize },
    #[error("row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("log returns need positive prices; row {row}, column {col} holds {value}")]
    NonPositivePrice { row: usize, col: usize, value: f64 },
    #[error("column {col} has zero variance and cannot be standardized")]
    ZeroVariance { col: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    pub header: bool,
    pub log_returns: bool,
    pub standardize: bool,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: DataMatrix,
    /// `XᵀX / n` of the processed matrix.
    pub cov: SymMatrix,
}

pub fn ingest(path: &Path, opts: IngestOptions) -> Result<Ingested, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(file, opts)
}

/// Rows and columns in error messages are 1-based and count data rows only.
pub fn ingest_reader<R: Read>(reader: R, opts: IngestOptions) -> Result<Ingested, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IngestError::Parse {
            row: r + 1,
            col: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| IngestError::NonNumeric {
                row: r + 1,
                col: c + 1,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonNumeric {
                    row: r + 1,
                    col: c + 1,
                    value: field.to_string(),
                });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(IngestError::Ragged {
                    row: r + 1,
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(IngestError::TooFewRows { rows: rows.len() });
    }
    let p = rows[0].len();

    if opts.log_returns {
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if !(v > 0.0) {
                    return Err(IngestError::NonPositivePrice {
                        row: r + 1,
                        col: c + 1,
                        value: v,
                    });
                }
            }
        }
        rows = rows
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| (b / a).ln()).collect())
            .collect();
    }

    if opts.standardize {
        let n = rows.len() as f64;
        for c in 0..p {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if !(sd > 1e-12 * (1.0 + mean.abs())) {
                return Err(IngestError::ZeroVariance { col: c + 1 });
            }
            rows.iter_mut().for_each(|r| r[c] = (r[c] - mean) / sd);
        }
    }

    let n = rows.len();
    let data = DataMatrix::new(n, p, rows.into_iter().flatten().collect()).expect("rectangular rows");
    let cov = data.covariance();
    Ok(Ingested { data, cov })
}
