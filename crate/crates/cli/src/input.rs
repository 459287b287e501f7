//! Wide-format curve files.
//!
//! The header is `s,<p_1>,...,<p_q>` with the observation points; each data
//! row is `<label>,<v_1>,...,<v_q>`.

use std::path::Path;

use fdf_core::fts::{rescale_points, smooth_to_sample, BSplineBasis, PointScale};
use fdf_core::{FunctionalSample, Grid};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    /// Observation points as written in the header.
    pub points: Vec<f64>,
    pub labels: Vec<String>,
    /// `N × q`.
    pub values: DMatrix<f64>,
}

/// Original abscissa range, kept so plots can be labelled in input units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointScaleRecord {
    pub min: f64,
    pub max: f64,
    pub points: Vec<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_number(field: &str, row: usize, column: usize) -> CliResult<f64> {
    let v: f64 = field.trim().parse().map_err(|_| CliError::Parse {
        row,
        column,
        message: format!("'{field}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(CliError::Parse { row, column, message: format!("'{field}' is not finite") });
    }
    Ok(v)
}

/// Parse a wide table from bytes. Rows and columns in errors are 1-based
/// and count the header as row 1.
pub fn parse_wide(bytes: &[u8]) -> CliResult<WideTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(CliError::Parse { row: 1, column: 1, message: "input is empty".into() }),
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
    };
    if header.get(0).map(str::trim) != Some("s") {
        return Err(CliError::Schema("first header field must be 's'".into()));
    }
    if header.len() < 2 {
        return Err(CliError::Schema("header lists no observation points".into()));
    }
    let points: Vec<f64> = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, f)| parse_number(f, 1, j + 1))
        .collect::<CliResult<_>>()?;
    let q = points.len();
    if points.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Schema("observation points must be strictly increasing".into()));
    }

    let mut labels = Vec::new();
    let mut flat = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| csv_error(e, row))?;
        if rec.len() == 1 && rec.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if rec.len() != q + 1 {
            return Err(CliError::Schema(format!("row {row} has {} fields, header has {}", rec.len(), q + 1)));
        }
        labels.push(rec.get(0).unwrap_or_default().trim().to_string());
        for (j, f) in rec.iter().enumerate().skip(1) {
            flat.push(parse_number(f, row, j + 1)?);
        }
    }
    if labels.is_empty() {
        return Err(CliError::Parse { row: 2, column: 1, message: "no data rows".into() });
    }
    let values = DMatrix::from_row_slice(labels.len(), q, &flat);
    Ok(WideTable { points, labels, values })
}

fn schema(e: fdf_core::FdfError) -> CliError {
    CliError::Schema(e.to_string())
}

fn csv_error(e: csv::Error, row: usize) -> CliError {
    CliError::Parse { row, column: 1, message: e.to_string() }
}

pub fn read_wide(path: &Path) -> CliResult<(WideTable, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let digest = sha256_hex(&bytes);
    Ok((parse_wide(&bytes)?, digest))
}

/// Curves on a common grid, ready for fitting.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sample: FunctionalSample,
    pub scale: PointScaleRecord,
    /// Basis size used for smoothing; `None` when the points became the grid.
    pub nbasis: Option<usize>,
}

/// Rescale the points to `[0, 1]`. With at least `m` points the rescaled
/// points themselves are the grid; otherwise each row is smoothed by cubic
/// B-splines (basis size capped at the number of points) and evaluated on a
/// uniform grid of `m` points.
pub fn prepare_sample(table: &WideTable, nbasis: usize, m: usize) -> CliResult<Prepared> {
    let q = table.points.len();
    let scaled = rescale_points(&table.points, PointScale::Calendar).map_err(schema)?;
    let scale = PointScaleRecord {
        min: table.points[0],
        max: table.points[q - 1],
        points: table.points.clone(),
    };
    if q >= m {
        let grid = Grid::from_points(scaled).map_err(schema)?;
        let sample = FunctionalSample::new(grid, table.values.clone()).map_err(schema)?;
        return Ok(Prepared { sample, scale, nbasis: None });
    }
    let k = nbasis.min(q);
    if k < 4 {
        return Err(CliError::Usage(format!("cubic smoothing needs at least 4 basis functions and points, got {k}")));
    }
    let basis = BSplineBasis::from_quantiles(3, k, &scaled)?;
    let grid = Grid::uniform(m).map_err(|e| CliError::Usage(e.to_string()))?;
    let sample = smooth_to_sample(&scaled, &table.values, &basis, &grid)?;
    Ok(Prepared { sample, scale, nbasis: Some(k) })
}
