//! CSV ingestion.

use std::path::Path;

use pcornet_core::data::{DataMatrix, DEFAULT_ORDINAL_MAX_LEVELS};
use thiserror::Error;

pub const DEFAULT_NA_TOKEN: &str = "NA";

/// Problems reading a data file. Lines and columns are 1-based; line 1 is
/// the header.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError { line: u64, column: usize, message: String },
    #[error("duplicate column name `{name}` (columns {first} and {second})")]
    DuplicateHeader { name: String, first: usize, second: usize },
    #[error("non-numeric value `{value}` at line {line}, column {column}")]
    NonNumericCell { line: u64, column: usize, value: String },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Data(#[from] pcornet_core::error::Error),
}

impl CsvError {
    pub fn kind(&self) -> &'static str {
        match self {
            CsvError::Io { .. } => "Io",
            CsvError::ParseError { .. } => "ParseError",
            CsvError::DuplicateHeader { .. } => "DuplicateHeader",
            CsvError::NonNumericCell { .. } => "NonNumericCell",
            CsvError::Shape(_) => "ParseError",
            CsvError::Data(e) => e.kind(),
        }
    }
}

/// Reads a numeric CSV file with a header row. `na_token` and empty cells
/// are missing values. Integer columns with at most `ordinal_max_levels`
/// distinct values are marked ordinal.
pub fn read_csv(path: &Path, ordinal_max_levels: usize, na_token: &str) -> Result<DataMatrix, CsvError> {
    let text = std::fs::read(path).map_err(|e| CsvError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_csv(&text, ordinal_max_levels, na_token)
}

/// [`read_csv`] with the default ordinal cut-off and missing token.
pub fn read_csv_default(path: &Path) -> Result<DataMatrix, CsvError> {
    read_csv(path, DEFAULT_ORDINAL_MAX_LEVELS, DEFAULT_NA_TOKEN)
}

fn csv_error(e: csv::Error) -> CsvError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => CsvError::ParseError {
            line,
            column: (*len).min(*expected_len) as usize + 1,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => CsvError::ParseError {
            line,
            column: err.field() + 1,
            message: "invalid UTF-8".into(),
        },
        _ => CsvError::ParseError { line, column: 0, message: e.to_string() },
    }
}

pub fn parse_csv(bytes: &[u8], ordinal_max_levels: usize, na_token: &str) -> Result<DataMatrix, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers().map_err(csv_error)?.clone();
    let labels: Vec<String> = header.iter().map(str::to_string).collect();
    for (j, name) in labels.iter().enumerate() {
        if name.is_empty() {
            return Err(CsvError::ParseError { line: 1, column: j + 1, message: "empty column name".into() });
        }
        if let Some(first) = labels[..j].iter().position(|l| l == name) {
            return Err(CsvError::DuplicateHeader { name: name.clone(), first: first + 1, second: j + 1 });
        }
    }
    if labels.len() < 2 {
        return Err(CsvError::Shape(format!("need at least 2 columns, found {}", labels.len())));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            let value = if cell.is_empty() || cell == na_token {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(CsvError::NonNumericCell { line, column: j + 1, value: cell.to_string() })
                    }
                }
            };
            columns[j].push(value);
        }
    }
    if columns[0].len() < 2 {
        return Err(CsvError::Shape(format!("need at least 2 data rows, found {}", columns[0].len())));
    }
    Ok(DataMatrix::with_detected_scales(columns, labels, ordinal_max_levels)?)
}

/// Writes a data table as CSV (missing values as `NA`).
pub fn write_csv(data: &DataMatrix) -> String {
    let mut out = data.labels().join(",");
    out.push('\n');
    for r in 0..data.n_rows() {
        let row: Vec<String> = (0..data.n_cols())
            .map(|j| {
                let v = data.value(r, j);
                if v.is_nan() {
                    DEFAULT_NA_TOKEN.to_string()
                } else {
                    v.to_string()
                }
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
