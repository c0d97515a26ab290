//! Observation tables with per-column measurement scales.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the number of distinct integer values for a column to
/// be detected as ordinal.
pub const DEFAULT_ORDINAL_MAX_LEVELS: usize = 7;

/// Measurement scale of a single column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Continuous,
    /// Ordered integer category codes, ascending.
    Ordinal { levels: Vec<i64> },
}

impl Scale {
    pub fn is_ordinal(&self) -> bool {
        matches!(self, Scale::Ordinal { .. })
    }
}

/// N x P observation table. Missing values are stored as `NaN`.
///
/// Storage is column-major: every estimator in this crate works one column
/// (or one pair of columns) at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
    scales: Vec<Scale>,
    n_rows: usize,
}

impl DataMatrix {
    /// Builds a table from columns, validating every invariant.
    pub fn new(columns: Vec<Vec<f64>>, labels: Vec<String>, scales: Vec<Scale>) -> Result<Self> {
        let p = columns.len();
        if p < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 columns, got {p}")));
        }
        if labels.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: labels.len() });
        }
        if scales.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: scales.len() });
        }
        let n_rows = columns[0].len();
        if n_rows < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 rows, got {n_rows}")));
        }
        for col in &columns {
            if col.len() != n_rows {
                return Err(Error::DimensionMismatch { expected: n_rows, found: col.len() });
            }
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate label `{label}`")));
            }
        }
        for ((col, scale), label) in columns.iter().zip(&scales).zip(&labels) {
            if col.iter().any(|v| v.is_infinite()) {
                return Err(Error::InvalidInput(format!("column `{label}` has infinite values")));
            }
            if let Scale::Ordinal { levels } = scale {
                if levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidInput(format!(
                        "ordinal levels of `{label}` must be strictly ascending"
                    )));
                }
                let bad = col
                    .iter()
                    .filter(|v| !v.is_nan())
                    .any(|&v| v.fract() != 0.0 || levels.binary_search(&(v as i64)).is_err());
                if bad {
                    return Err(Error::InvalidInput(format!(
                        "ordinal column `{label}` contains undeclared codes"
                    )));
                }
            }
        }
        Ok(Self { columns, labels, scales, n_rows })
    }

    /// Builds a table whose scales are detected from the values.
    pub fn with_detected_scales(
        columns: Vec<Vec<f64>>,
        labels: Vec<String>,
        max_levels: usize,
    ) -> Result<Self> {
        let scales = columns.iter().map(|c| detect_scale(c, max_levels)).collect();
        Self::new(columns, labels, scales)
    }

    /// All columns continuous, labels `V1..VP`.
    pub fn continuous(columns: Vec<Vec<f64>>) -> Result<Self> {
        let labels = default_labels(columns.len());
        let scales = vec![Scale::Continuous; columns.len()];
        Self::new(columns, labels, scales)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn scales(&self) -> &[Scale] {
        &self.scales
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(|c| c.iter().any(|v| v.is_nan()))
    }

    /// New table made of the given rows, in the given order. Rows may repeat.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 rows, got {}", rows.len())));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.n_rows });
        }
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        Ok(Self {
            columns,
            labels: self.labels.clone(),
            scales: self.scales.clone(),
            n_rows: rows.len(),
        })
    }

    /// Stacks the rows of `other` under `self`. Columns must match.
    pub fn concat_rows(&self, other: &Self) -> Result<Self> {
        if self.labels != other.labels || self.scales != other.scales {
            return Err(Error::ColumnMismatch);
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(Self {
            columns,
            labels: self.labels.clone(),
            scales: self.scales.clone(),
            n_rows: self.n_rows + other.n_rows,
        })
    }

    /// Replaces the scales, re-validating the ordinal codes.
    pub fn with_scales(self, scales: Vec<Scale>) -> Result<Self> {
        Self::new(self.columns, self.labels, scales)
    }

    /// Indices of rows without missing values.
    pub fn complete_cases(&self) -> Vec<usize> {
        (0..self.n_rows)
            .filter(|&r| self.columns.iter().all(|c| !c[r].is_nan()))
            .collect()
    }
}

/// `V1`, `V2`, ...
pub fn default_labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("V{i}")).collect()
}

/// Ordinal when every observed value is an integer and there are at most
/// `max_levels` distinct values; continuous otherwise.
pub fn detect_scale(values: &[f64], max_levels: usize) -> Scale {
    let mut levels = BTreeSet::new();
    for &v in values.iter().filter(|v| !v.is_nan()) {
        if v.fract() != 0.0 || v.abs() > 1e15 {
            return Scale::Continuous;
        }
        levels.insert(v as i64);
        if levels.len() > max_levels {
            return Scale::Continuous;
        }
    }
    if levels.is_empty() {
        return Scale::Continuous;
    }
    Scale::Ordinal { levels: levels.into_iter().collect() }
}
