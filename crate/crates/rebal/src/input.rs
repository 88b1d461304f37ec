//! CSV ingestion of return tables.
//!
//! Expected shape: a header row (`period label column, asset labels...`),
//! then one row per period with a period label followed by one return per
//! asset. Values default to percent (`-9.10` or the accounting style
//! `(9.10)` both mean -9.1%); decimal mode takes fractions directly.
//!
//! A column may start with empty cells: the asset joins the universe at its
//! first non-empty row, and the matrix carries that availability schedule.
//! Empty cells after the first value are rejected — gaps inside a live
//! series have no meaning here.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::engine::{EngineError, ReturnMatrix};

/// Unit the CSV cells are written in. Internally everything is decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Unit {
    #[default]
    Percent,
    Decimal,
}

/// Parse failures carry 1-based file coordinates: line counts the header,
/// column counts the period-label column.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("table needs a header row plus at least one period row and one asset column")]
    EmptyTable,
    #[error("header column {column} has no asset label")]
    MissingHeaderLabel { column: usize },
    #[error("line {line} has {got} return cells, expected {expected}")]
    RaggedRow {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("line {line}, column {column}: cannot parse {content:?} as a number")]
    NonNumericCell {
        line: usize,
        column: usize,
        content: String,
    },
    #[error("line {line}, column {column}: return {value} must be greater than -100%")]
    TotalLoss {
        line: usize,
        column: usize,
        value: f64,
    },
    #[error("line {line}, column {column}: empty cell after the series started (only leading cells may be empty)")]
    GapInSeries { line: usize, column: usize },
    #[error("column {column} ({label}) has no values")]
    EmptyColumn { column: usize, label: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl InputError {
    /// True for filesystem-level failures (exit code 2); everything else is
    /// a content problem (exit code 1).
    pub fn is_io(&self) -> bool {
        match self {
            InputError::Io { .. } => true,
            InputError::Csv(error) => error.is_io_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, InputError>;

/// A parsed return table: the validated matrix plus the period labels from
/// the first column.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub matrix: ReturnMatrix,
    pub period_labels: Vec<String>,
}

pub fn parse_csv_file(path: &Path, unit: Unit) -> Result<ParsedTable> {
    let file = File::open(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv_reader(BufReader::new(file), unit)
}

pub fn parse_csv_reader<R: Read>(reader: R, unit: Unit) -> Result<ParsedTable> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = csv_reader.records();

    let header = match records.next() {
        Some(record) => record?,
        None => return Err(InputError::EmptyTable),
    };
    let mut labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    while labels.last().is_some_and(String::is_empty) {
        labels.pop();
    }
    if labels.is_empty() {
        return Err(InputError::EmptyTable);
    }
    if let Some(blank) = labels.iter().position(String::is_empty) {
        return Err(InputError::MissingHeaderLabel { column: blank + 2 });
    }
    let n_assets = labels.len();

    let mut period_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    // First live row per asset, discovered as values appear.
    let mut first_row: Vec<Option<usize>> = vec![None; n_assets];

    for (index, record) in records.enumerate() {
        let record = record?;
        let line = record
            .position()
            .map_or(index + 2, |p| p.line() as usize);
        if record.len() != n_assets + 1 {
            return Err(InputError::RaggedRow {
                line,
                got: record.len().saturating_sub(1),
                expected: n_assets,
            });
        }
        period_labels.push(record[0].to_owned());
        let mut row = vec![0.0; n_assets];
        for asset in 0..n_assets {
            let cell = &record[asset + 1];
            let column = asset + 2;
            if cell.is_empty() {
                if first_row[asset].is_some() {
                    return Err(InputError::GapInSeries { line, column });
                }
                continue;
            }
            let raw = parse_number(cell).ok_or_else(|| InputError::NonNumericCell {
                line,
                column,
                content: cell.to_owned(),
            })?;
            let value = match unit {
                Unit::Percent => raw / 100.0,
                Unit::Decimal => raw,
            };
            if value <= -1.0 {
                return Err(InputError::TotalLoss {
                    line,
                    column,
                    value,
                });
            }
            if first_row[asset].is_none() {
                first_row[asset] = Some(rows.len());
            }
            row[asset] = value;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(InputError::EmptyTable);
    }

    let mut availability = Vec::with_capacity(n_assets);
    for (asset, first) in first_row.iter().enumerate() {
        availability.push(first.ok_or_else(|| InputError::EmptyColumn {
            column: asset + 2,
            label: labels[asset].clone(),
        })?);
    }

    let matrix = if availability.iter().all(|&index| index == 0) {
        ReturnMatrix::from_rows(labels, rows)?
    } else {
        ReturnMatrix::with_availability(labels, rows, availability)?
    };
    Ok(ParsedTable {
        matrix,
        period_labels,
    })
}

/// Plain float, or the accounting negative `(9.10)` -> -9.10.
fn parse_number(cell: &str) -> Option<f64> {
    if let Some(inner) = cell.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        return inner.trim().parse::<f64>().ok().map(|v| -v);
    }
    cell.parse().ok()
}
