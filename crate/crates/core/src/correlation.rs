//! Input correlation matrices: Pearson, Spearman, and the mixed
//! polychoric/polyserial/Pearson matrix used for ordinal data.
//!
//! Every estimator uses pairwise-complete deletion: each pair of columns is
//! estimated on the rows where both values are observed, and the count is
//! kept in `pairwise_n`. Pairwise estimation does not guarantee a
//! positive-semidefinite matrix, so every constructor ends with
//! [`nearest_pd`].

use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Scale, DEFAULT_ORDINAL_MAX_LEVELS};
use crate::error::{Error, Result};
use crate::numeric::{bvn_rect, maximize_on_interval, mid_ranks, norm_cdf, norm_quantile, pearson};

/// Bound on |rho| for the latent-correlation estimators.
pub const RHO_CAP: f64 = 1.0 - 1e-6;

/// Expected cell counts below this trigger a low-frequency warning.
pub const MIN_EXPECTED_CELL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorMethod {
    Pearson,
    Spearman,
    /// Polychoric / polyserial / Pearson by column scale.
    #[serde(rename = "auto")]
    AutoMixed,
}

impl CorMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorMethod::Pearson => "pearson",
            CorMethod::Spearman => "spearman",
            CorMethod::AutoMixed => "auto",
        }
    }
}

/// Symmetric, unit-diagonal correlation matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: DMatrix<f64>,
    pub labels: Vec<String>,
    pub method: CorMethod,
    pub pd_repaired: bool,
    pub pairwise_n: DMatrix<usize>,
    pub warnings: Vec<String>,
}

impl CorrelationMatrix {
    /// Wraps an already-valid correlation matrix (e.g. a population matrix).
    pub fn from_matrix(entries: DMatrix<f64>, method: CorMethod, n: usize) -> Result<Self> {
        let p = entries.nrows();
        if entries.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: entries.ncols() });
        }
        for i in 0..p {
            if entries[(i, i)] != 1.0 {
                return Err(Error::InvalidInput(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if (a - b).abs() > 1e-12 || !a.is_finite() || a.abs() > 1.0 {
                    return Err(Error::InvalidInput(format!("entry ({i}, {j}) is invalid")));
                }
            }
        }
        Ok(Self {
            entries,
            labels: crate::data::default_labels(p),
            method,
            pd_repaired: false,
            pairwise_n: DMatrix::from_element(p, p, n),
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_abs_off_diagonal(&self) -> f64 {
        let p = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..p {
            for j in 0..i {
                m = m.max(self.entries[(i, j)].abs());
            }
        }
        m
    }

    pub fn mean_abs_off_diagonal(&self) -> f64 {
        let p = self.dim();
        if p < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..p {
            for j in 0..i {
                sum += self.entries[(i, j)].abs();
            }
        }
        sum / (p * (p - 1) / 2) as f64
    }

    /// Smallest number of complete pairs over all column pairs.
    pub fn min_pairwise_n(&self) -> usize {
        self.pairwise_n.iter().copied().min().unwrap_or(0)
    }
}

/// Ascending cut points on the latent standard-normal scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub cuts: Vec<f64>,
}

impl ThresholdSet {
    /// Cut points padded with -inf / +inf.
    fn bounds(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.cuts.len() + 2);
        b.push(f64::NEG_INFINITY);
        b.extend_from_slice(&self.cuts);
        b.push(f64::INFINITY);
        b
    }
}

/// Result of eigenvalue-clipping repair.
#[derive(Debug, Clone, PartialEq)]
pub struct PdRepair {
    pub matrix: DMatrix<f64>,
    pub repaired: bool,
    pub min_eigenvalue_before: f64,
}

/// Options for [`auto_corr_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct AutoCorrOptions {
    /// Integer columns with at most this many distinct values are ordinal.
    pub max_ordinal_levels: usize,
    /// Labels forced to the continuous scale regardless of detection.
    pub force_continuous: Vec<String>,
    /// Labels forced to the ordinal scale regardless of detection.
    pub force_ordinal: Vec<String>,
}

impl Default for AutoCorrOptions {
    fn default() -> Self {
        Self {
            max_ordinal_levels: DEFAULT_ORDINAL_MAX_LEVELS,
            force_continuous: Vec::new(),
            force_ordinal: Vec::new(),
        }
    }
}

fn complete_pairs(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(&a, &b)| (a, b))
        .unzip()
}

fn check_columns_vary(data: &DataMatrix) -> Result<()> {
    for (j, col) in data.columns().iter().enumerate() {
        let mut it = col.iter().filter(|v| !v.is_nan());
        let first = it.next();
        let varies = first.is_some_and(|f| it.any(|v| v != f));
        if !varies {
            return Err(Error::ZeroVariance { column: data.labels()[j].clone() });
        }
    }
    Ok(())
}

/// Fills a correlation matrix from a pairwise estimator, then repairs it.
fn assemble<F>(data: &DataMatrix, method: CorMethod, pair: F) -> Result<CorrelationMatrix>
where
    F: Fn(usize, usize) -> Result<(f64, usize, Vec<String>)> + Sync,
{
    let p = data.n_cols();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let estimates: Vec<Result<(f64, usize, Vec<String>)>> =
        pairs.par_iter().map(|&(i, j)| pair(i, j)).collect();

    let mut entries = DMatrix::identity(p, p);
    let mut pairwise_n = DMatrix::zeros(p, p);
    let mut warnings = Vec::new();
    for j in 0..p {
        pairwise_n[(j, j)] = data.column(j).iter().filter(|v| !v.is_nan()).count();
    }
    for (&(i, j), est) in pairs.iter().zip(estimates) {
        let (r, n, w) = est?;
        entries[(i, j)] = r;
        entries[(j, i)] = r;
        pairwise_n[(i, j)] = n;
        pairwise_n[(j, i)] = n;
        warnings.extend(w);
    }
    let repair = nearest_pd(&entries);
    if repair.repaired {
        let msg = format!(
            "correlation matrix was not positive semi-definite (smallest eigenvalue {:.4e}); \
             replaced by the nearest positive-definite matrix, results may be unstable",
            repair.min_eigenvalue_before
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(CorrelationMatrix {
        entries: repair.matrix,
        labels: data.labels().to_vec(),
        method,
        pd_repaired: repair.repaired,
        pairwise_n,
        warnings,
    })
}

fn pearson_pair(data: &DataMatrix, i: usize, j: usize) -> Result<(f64, usize, Vec<String>)> {
    let (x, y) = complete_pairs(data.column(i), data.column(j));
    let labels = data.labels();
    if x.len() < 2 {
        return Err(Error::InsufficientData { a: labels[i].clone(), b: labels[j].clone() });
    }
    match pearson(&x, &y) {
        Some(r) => Ok((r, x.len(), Vec::new())),
        None => {
            let constant = if x.iter().all(|v| *v == x[0]) { i } else { j };
            Err(Error::ZeroVariance { column: labels[constant].clone() })
        }
    }
}

/// Pairwise-complete Pearson correlation matrix.
pub fn pearson_corr(data: &DataMatrix) -> Result<CorrelationMatrix> {
    check_columns_vary(data)?;
    assemble(data, CorMethod::Pearson, |i, j| pearson_pair(data, i, j))
}

/// Pairwise-complete Spearman correlation: Pearson on mid-ranks.
pub fn spearman_corr(data: &DataMatrix) -> Result<CorrelationMatrix> {
    check_columns_vary(data)?;
    // Columns without missing values are ranked once; others per pair.
    let full_ranks: Vec<Option<Vec<f64>>> = data
        .columns()
        .iter()
        .map(|c| (!c.iter().any(|v| v.is_nan())).then(|| mid_ranks(c)))
        .collect();
    assemble(data, CorMethod::Spearman, |i, j| {
        let labels = data.labels();
        let (rx, ry) = match (&full_ranks[i], &full_ranks[j]) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            _ => {
                let (x, y) = complete_pairs(data.column(i), data.column(j));
                (mid_ranks(&x), mid_ranks(&y))
            }
        };
        if rx.len() < 2 {
            return Err(Error::InsufficientData { a: labels[i].clone(), b: labels[j].clone() });
        }
        match pearson(&rx, &ry) {
            Some(r) => Ok((r, rx.len(), Vec::new())),
            None => {
                let constant = if rx.iter().all(|v| *v == rx[0]) { i } else { j };
                Err(Error::ZeroVariance { column: labels[constant].clone() })
            }
        }
    })
}

/// Sorted distinct observed values and their counts.
fn level_counts(column: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut vals: Vec<f64> = column.iter().copied().filter(|v| !v.is_nan()).collect();
    vals.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in vals {
        if levels.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            levels.push(v);
            counts.push(1);
        }
    }
    (levels, counts)
}

fn thresholds_from_counts(counts: &[usize]) -> ThresholdSet {
    let total: usize = counts.iter().sum();
    let mut cum = 0usize;
    let cuts = counts[..counts.len() - 1]
        .iter()
        .map(|&c| {
            cum += c;
            norm_quantile(cum as f64 / total as f64)
        })
        .collect();
    ThresholdSet { cuts }
}

/// Thresholds from the marginal proportions of an ordinal column:
/// cut k is the normal quantile of the cumulative share of the first k
/// observed levels.
pub fn estimate_thresholds(column: &[f64]) -> Result<ThresholdSet> {
    let (levels, counts) = level_counts(column);
    if levels.len() < 2 {
        return Err(Error::DegenerateColumn { column: String::from("<unnamed>") });
    }
    Ok(thresholds_from_counts(&counts))
}

/// Maps each value to the index of its level in `levels`.
fn codes(values: &[f64], levels: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| levels.binary_search_by(|l| l.total_cmp(v)).expect("value among levels"))
        .collect()
}

/// Polychoric estimate with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPairEstimate {
    pub rho: f64,
    pub n: usize,
    /// Smallest expected cell count under the fitted model (polychoric only).
    pub min_expected_count: Option<f64>,
}

fn named(name: Option<&str>) -> String {
    name.unwrap_or("<unnamed>").to_string()
}

/// Two-step polychoric correlation with diagnostics.
pub fn polychoric_detail(
    x: &[f64],
    y: &[f64],
    names: Option<(&str, &str)>,
) -> Result<LatentPairEstimate> {
    let (xa, ya) = complete_pairs(x, y);
    let (nx, ny) = (names.map(|n| n.0), names.map(|n| n.1));
    let (lx, cx) = level_counts(&xa);
    let (ly, cy) = level_counts(&ya);
    if lx.len() < 2 || ly.len() < 2 {
        return Err(Error::DegenerateTable { a: named(nx), b: named(ny) });
    }
    let bx = thresholds_from_counts(&cx).bounds();
    let by = thresholds_from_counts(&cy).bounds();
    let (kx, ky) = (lx.len(), ly.len());
    let mut table = vec![0usize; kx * ky];
    for (a, b) in codes(&xa, &lx).into_iter().zip(codes(&ya, &ly)) {
        table[a * ky + b] += 1;
    }
    let cells: Vec<(usize, usize, f64)> = (0..kx)
        .flat_map(|a| (0..ky).map(move |b| (a, b)))
        .filter(|&(a, b)| table[a * ky + b] > 0)
        .map(|(a, b)| (a, b, table[a * ky + b] as f64))
        .collect();
    let loglik = |rho: f64| {
        cells
            .iter()
            .map(|&(a, b, n)| n * bvn_rect(bx[a], bx[a + 1], by[b], by[b + 1], rho).max(1e-300).ln())
            .sum::<f64>()
    };
    let (mut rho, _) = maximize_on_interval(loglik, -RHO_CAP, RHO_CAP, 1e-7);
    if (RHO_CAP - rho.abs()) < 1e-6 {
        rho = RHO_CAP.copysign(rho);
    }
    let n = xa.len() as f64;
    let mut min_expected = f64::INFINITY;
    for a in 0..kx {
        for b in 0..ky {
            let e = n * bvn_rect(bx[a], bx[a + 1], by[b], by[b + 1], rho);
            min_expected = min_expected.min(e);
        }
    }
    Ok(LatentPairEstimate { rho, n: xa.len(), min_expected_count: Some(min_expected) })
}

/// Two-step polychoric correlation of two ordinal columns: thresholds from
/// the marginals, then the rho maximizing the multinomial likelihood of the
/// contingency table under a latent bivariate normal.
pub fn polychoric_pair(x: &[f64], y: &[f64]) -> Result<f64> {
    polychoric_detail(x, y, None).map(|e| e.rho)
}

/// Two-step polyserial correlation with diagnostics.
pub fn polyserial_detail(
    x: &[f64],
    y: &[f64],
    names: Option<(&str, &str)>,
) -> Result<LatentPairEstimate> {
    let (xa, ya) = complete_pairs(x, y);
    let (nx, ny) = (names.map(|n| n.0), names.map(|n| n.1));
    let n = xa.len();
    if n < 2 {
        return Err(Error::InsufficientData { a: named(nx), b: named(ny) });
    }
    let mean = xa.iter().sum::<f64>() / n as f64;
    let var = xa.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(Error::DegenerateColumn { column: named(nx) });
    }
    let sd = var.sqrt();
    let (ly, cy) = level_counts(&ya);
    if ly.len() < 2 {
        return Err(Error::DegenerateColumn { column: named(ny) });
    }
    let by = thresholds_from_counts(&cy).bounds();
    let z: Vec<f64> = xa.iter().map(|v| (v - mean) / sd).collect();
    let cy_idx = codes(&ya, &ly);
    // The marginal density of x does not depend on rho and is dropped.
    let loglik = |rho: f64| {
        let s = (1.0 - rho * rho).sqrt();
        z.iter()
            .zip(&cy_idx)
            .map(|(&zi, &k)| {
                let hi = norm_cdf((by[k + 1] - rho * zi) / s);
                let lo = norm_cdf((by[k] - rho * zi) / s);
                (hi - lo).max(1e-300).ln()
            })
            .sum::<f64>()
    };
    let (mut rho, _) = maximize_on_interval(loglik, -RHO_CAP, RHO_CAP, 1e-7);
    if (RHO_CAP - rho.abs()) < 1e-6 {
        rho = RHO_CAP.copysign(rho);
    }
    Ok(LatentPairEstimate { rho, n, min_expected_count: None })
}

/// Two-step polyserial correlation between a continuous `x` and an ordinal `y`.
pub fn polyserial_pair(x: &[f64], y: &[f64]) -> Result<f64> {
    polyserial_detail(x, y, None).map(|e| e.rho)
}

/// Which columns [`auto_corr_with`] treats as ordinal.
pub fn auto_scales(data: &DataMatrix, options: &AutoCorrOptions) -> Vec<bool> {
    data.labels()
        .iter()
        .zip(data.columns())
        .map(|(label, col)| {
            if options.force_continuous.contains(label) {
                false
            } else if options.force_ordinal.contains(label) {
                true
            } else {
                crate::data::detect_scale(col, options.max_ordinal_levels).is_ordinal()
            }
        })
        .collect()
}

/// Mixed correlation matrix with default detection (at most 7 distinct
/// integer values makes a column ordinal).
pub fn auto_corr(data: &DataMatrix) -> Result<CorrelationMatrix> {
    auto_corr_with(data, &AutoCorrOptions::default())
}

/// Ordinal x ordinal pairs get polychoric, ordinal x continuous polyserial,
/// continuous x continuous Pearson correlations.
pub fn auto_corr_with(data: &DataMatrix, options: &AutoCorrOptions) -> Result<CorrelationMatrix> {
    check_columns_vary(data)?;
    let ordinal = auto_scales(data, options);
    let labels = data.labels();
    let mut out = assemble(data, CorMethod::AutoMixed, |i, j| {
        let names = Some((labels[i].as_str(), labels[j].as_str()));
        match (ordinal[i], ordinal[j]) {
            (false, false) => pearson_pair(data, i, j),
            (true, true) => {
                let est = polychoric_detail(data.column(i), data.column(j), names)?;
                let mut w = Vec::new();
                if let Some(e) = est.min_expected_count.filter(|&e| e < MIN_EXPECTED_CELL) {
                    w.push(format!(
                        "polychoric correlation of `{}` and `{}` has an expected cell count of {e:.2} \
                         (below {MIN_EXPECTED_CELL}); the estimate may be biased",
                        labels[i], labels[j]
                    ));
                }
                Ok((est.rho, est.n, w))
            }
            (false, true) => polyserial_detail(data.column(i), data.column(j), names)
                .map(|e| (e.rho, e.n, Vec::new())),
            (true, false) => {
                let rev = Some((labels[j].as_str(), labels[i].as_str()));
                polyserial_detail(data.column(j), data.column(i), rev)
                    .map(|e| (e.rho, e.n, Vec::new()))
            }
        }
    })?;
    if ordinal.iter().any(|&o| o) {
        let low = out.warnings.iter().filter(|w| w.contains("expected cell count")).count();
        if low > 0 {
            warn!("{low} polychoric pairs have expected cell counts below {MIN_EXPECTED_CELL}");
        }
    } else {
        // Identical to the Pearson matrix; keep the provenance honest.
        out.method = CorMethod::Pearson;
    }
    Ok(out)
}

/// Correlation matrix by method.
pub fn correlate(data: &DataMatrix, method: CorMethod) -> Result<CorrelationMatrix> {
    match method {
        CorMethod::Pearson => pearson_corr(data),
        CorMethod::Spearman => spearman_corr(data),
        CorMethod::AutoMixed => auto_corr(data),
    }
}

/// Nonparanormal transform: each column passes through its truncated
/// empirical CDF and then the standard-normal quantile function.
///
/// The empirical CDF uses mid-ranks / n and is clipped to
/// `[delta, 1 - delta]` with `delta = 1 / (4 n^{1/4} sqrt(pi log n))`.
/// Missing values stay missing; n counts the observed values per column.
pub fn nonparanormal_transform(data: &DataMatrix) -> Result<DataMatrix> {
    let mut columns = Vec::with_capacity(data.n_cols());
    for (j, col) in data.columns().iter().enumerate() {
        let observed: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let n = observed.len();
        let distinct = observed.iter().any(|v| *v != observed[0]);
        if n < 2 || !distinct {
            return Err(Error::DegenerateColumn { column: data.labels()[j].clone() });
        }
        let nf = n as f64;
        let delta = 1.0 / (4.0 * nf.powf(0.25) * (PI * nf.ln()).sqrt());
        let ranks = mid_ranks(&observed);
        let mut it = ranks.into_iter();
        let out: Vec<f64> = col
            .iter()
            .map(|v| {
                if v.is_nan() {
                    f64::NAN
                } else {
                    let u = (it.next().unwrap() / nf).clamp(delta, 1.0 - delta);
                    norm_quantile(u)
                }
            })
            .collect();
        columns.push(out);
    }
    DataMatrix::new(columns, data.labels().to_vec(), vec![Scale::Continuous; data.n_cols()])
}

/// Nearest positive-definite correlation matrix by eigenvalue clipping.
///
/// Input with a nonnegative smallest eigenvalue is returned unchanged.
/// Otherwise eigenvalues below `1e-8 * lambda_max` are raised to that
/// floor, the matrix is rebuilt, and it is rescaled to a unit diagonal.
pub fn nearest_pd(m: &DMatrix<f64>) -> PdRepair {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return PdRepair { matrix: m.clone(), repaired: false, min_eigenvalue_before: min };
    }
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = 1e-8 * max.max(f64::MIN_POSITIVE);
    let clipped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(floor)),
    );
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let p = m.nrows();
    let scale: Vec<f64> = (0..p).map(|i| rebuilt[(i, i)].sqrt()).collect();
    let mut out = DMatrix::identity(p, p);
    for i in 0..p {
        for j in 0..i {
            let r = (rebuilt[(i, j)] + rebuilt[(j, i)]) / 2.0 / (scale[i] * scale[j]);
            let r = r.clamp(-1.0, 1.0);
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    PdRepair { matrix: out, repaired: true, min_eigenvalue_before: min }
}
