//! Data generation from a known partial-correlation network and recovery
//! studies over sample-size x estimator grids.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Scale};
use crate::error::{Error, Result};
use crate::glasso::{PcorNetwork, PrecisionMatrix};
use crate::network::{centrality_table, CentralityIndex};
use crate::numeric::{min_eigenvalue, norm_quantile, pearson, replicate_rng};
use crate::pipeline::{estimate, EstimatorConfig};

/// Unit-diagonal precision matrix `K = I - W` of a network, with the implied
/// correlation matrix in `implied_cov`.
pub fn network_to_precision(net: &PcorNetwork) -> Result<PrecisionMatrix> {
    let p = net.dim();
    let k = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { -net.weight(i, j) });
    let chol = match k.clone().cholesky() {
        Some(c) => c,
        None => return Err(Error::NotPositiveDefinite { min_eigenvalue: min_eigenvalue(&k) }),
    };
    let sigma = chol.inverse();
    let d: Vec<f64> = (0..p).map(|i| sigma[(i, i)].sqrt()).collect();
    let implied = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { sigma[(i, j)] / (d[i] * d[j]) });
    Ok(PrecisionMatrix { k, lambda: 0.0, converged: true, iterations: 0, implied_cov: implied })
}

/// Correlation matrix implied by a network.
pub fn implied_correlation(net: &PcorNetwork) -> Result<DMatrix<f64>> {
    Ok(network_to_precision(net)?.implied_cov)
}

/// Cycle 1-2-...-p-1 with weights uniform on `[w_min, w_max]`; with
/// `random_signs` each weight is negated with probability 1/2.
pub fn chain_graph(p: usize, w_min: f64, w_max: f64, seed: u64, random_signs: bool) -> Result<PcorNetwork> {
    if p < 3 {
        return Err(Error::InvalidInput(format!("a chain graph needs at least 3 nodes, got {p}")));
    }
    if !(0.0 <= w_min && w_min <= w_max && w_max < 1.0) {
        return Err(Error::InvalidInput(format!("bad weight range [{w_min}, {w_max}]")));
    }
    let mut rng = replicate_rng(seed, 0);
    let mut w = DMatrix::zeros(p, p);
    for i in 0..p {
        let j = (i + 1) % p;
        let mut v = if w_max > w_min { rng.random_range(w_min..=w_max) } else { w_min };
        if random_signs && rng.random_bool(0.5) {
            v = -v;
        }
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    PcorNetwork::new(w, crate::data::default_labels(p))
}

/// Draws `n` rows from the zero-mean normal with the network's implied
/// correlation matrix.
pub fn sample_ggm(net: &PcorNetwork, n: usize, seed: u64) -> Result<DataMatrix> {
    let sigma = implied_correlation(net)?;
    sample_with_correlation(&sigma, net.labels(), n, &mut replicate_rng(seed, 0))
}

fn sample_with_correlation(
    sigma: &DMatrix<f64>,
    labels: &[String],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DataMatrix> {
    let p = sigma.nrows();
    let l = sigma
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: min_eigenvalue(sigma) })?
        .l();
    let mut columns = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let x = &l * z;
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(x[j]);
        }
    }
    DataMatrix::new(columns, labels.to_vec(), vec![Scale::Continuous; p])
}

/// How category thresholds are chosen when discretizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    /// Standard-normal quantiles at k / levels.
    Equiprobable,
    /// Sorted standard-normal draws, fresh per column.
    Sampled(u64),
}

/// Cuts each column at thresholds on the standard-normal scale, giving
/// codes `0..levels`. Missing values stay missing.
pub fn ordinalize(data: &DataMatrix, levels: usize, mode: ThresholdMode) -> Result<DataMatrix> {
    let mut rng = match mode {
        ThresholdMode::Sampled(seed) => Some(replicate_rng(seed, 0)),
        ThresholdMode::Equiprobable => None,
    };
    ordinalize_with(data, levels, mode, rng.as_mut())
}

fn ordinalize_with(
    data: &DataMatrix,
    levels: usize,
    mode: ThresholdMode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<DataMatrix> {
    if !(2..=10).contains(&levels) {
        return Err(Error::InvalidInput(format!("levels must be in 2..=10, got {levels}")));
    }
    if data.scales().iter().any(Scale::is_ordinal) {
        return Err(Error::InvalidInput("ordinalize expects continuous columns".into()));
    }
    let equiprobable: Vec<f64> = (1..levels).map(|k| norm_quantile(k as f64 / levels as f64)).collect();
    let mut columns = Vec::with_capacity(data.n_cols());
    for col in data.columns() {
        let cuts = match (mode, rng.as_deref_mut()) {
            (ThresholdMode::Sampled(_), Some(r)) => {
                let mut t: Vec<f64> = (1..levels).map(|_| StandardNormal.sample(&mut *r)).collect();
                t.sort_by(f64::total_cmp);
                t
            }
            _ => equiprobable.clone(),
        };
        columns.push(
            col.iter()
                .map(|&v| if v.is_nan() { v } else { cuts.iter().filter(|&&c| v > c).count() as f64 })
                .collect(),
        );
    }
    let scale = Scale::Ordinal { levels: (0..levels as i64).collect() };
    DataMatrix::new(columns, data.labels().to_vec(), vec![scale; data.n_cols()])
}

/// Edge recovery of an estimate against the generating network. `None`
/// marks a metric whose denominator (or variance) is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub edge_correlation: Option<f64>,
}

pub fn compare_networks(truth: &PcorNetwork, est: &PcorNetwork) -> Result<RecoveryMetrics> {
    if truth.dim() != est.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), found: est.dim() });
    }
    let t = truth.upper_triangle();
    let e = est.upper_triangle();
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (a, b) in t.iter().zip(&e) {
        match (*a != 0.0, *b != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(RecoveryMetrics {
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        edge_correlation: pearson(&t, &e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Continuous,
    Ordinal { levels: usize, thresholds: ThresholdMode },
}

#[derive(Debug, Clone)]
pub struct SimulationGrid {
    pub truth: PcorNetwork,
    pub n_cases: Vec<usize>,
    pub n_reps: usize,
    pub generator: Generator,
    /// Estimator variants; each is crossed with every sample size.
    pub configs: Vec<EstimatorConfig>,
    pub master_seed: u64,
}

/// One (estimator, sample size, replicate) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub condition: usize,
    pub config_index: usize,
    pub n: usize,
    pub rep: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub edge_correlation: Option<f64>,
    pub strength_correlation: Option<f64>,
    pub closeness_correlation: Option<f64>,
    pub betweenness_correlation: Option<f64>,
    pub edge_count: Option<usize>,
    /// Every fit on the penalty path converged.
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Mean over rows where the metric is defined.
    pub mean: Option<f64>,
    pub defined: usize,
}

impl MetricSummary {
    fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        Self { mean, defined: v.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: usize,
    pub config_index: usize,
    pub n: usize,
    pub reps: usize,
    pub failed: usize,
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub edge_correlation: MetricSummary,
    pub strength_correlation: MetricSummary,
    pub closeness_correlation: MetricSummary,
    pub betweenness_correlation: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub rows: Vec<SimulationRow>,
    pub master_seed: u64,
}

impl SimulationResult {
    /// Per-condition means, in condition order.
    pub fn summary(&self) -> Vec<ConditionSummary> {
        let mut conditions: Vec<usize> = self.rows.iter().map(|r| r.condition).collect();
        conditions.dedup();
        conditions
            .into_iter()
            .map(|c| {
                let rows: Vec<&SimulationRow> = self.rows.iter().filter(|r| r.condition == c).collect();
                let m = |f: fn(&SimulationRow) -> Option<f64>| MetricSummary::of(rows.iter().map(|r| f(r)));
                ConditionSummary {
                    condition: c,
                    config_index: rows[0].config_index,
                    n: rows[0].n,
                    reps: rows.len(),
                    failed: rows.iter().filter(|r| r.error.is_some()).count(),
                    sensitivity: m(|r| r.sensitivity),
                    specificity: m(|r| r.specificity),
                    edge_correlation: m(|r| r.edge_correlation),
                    strength_correlation: m(|r| r.strength_correlation),
                    closeness_correlation: m(|r| r.closeness_correlation),
                    betweenness_correlation: m(|r| r.betweenness_correlation),
                }
            })
            .collect()
    }
}

fn validate_grid(grid: &SimulationGrid) -> Result<()> {
    if grid.n_cases.is_empty() || grid.n_cases.iter().any(|&n| n < 10) {
        return Err(Error::InvalidInput("every sample size must be at least 10".into()));
    }
    if grid.n_reps == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    if grid.configs.is_empty() {
        return Err(Error::InvalidInput("need at least one estimator configuration".into()));
    }
    Ok(())
}

/// Runs every (estimator, sample size, replicate) cell. Cell `c` uses the
/// random stream `c` of the master seed; cells are numbered
/// configuration-major, then sample size, then replicate.
pub fn net_simulator(grid: &SimulationGrid) -> Result<SimulationResult> {
    validate_grid(grid)?;
    let sigma = implied_correlation(&grid.truth)?;
    let truth_centrality = centrality_table(&grid.truth);
    let conditions: Vec<(usize, usize)> = (0..grid.configs.len())
        .flat_map(|c| grid.n_cases.iter().map(move |&n| (c, n)))
        .collect();
    let cells: Vec<(usize, usize, usize, usize)> = conditions
        .iter()
        .enumerate()
        .flat_map(|(cond, &(ci, n))| (0..grid.n_reps).map(move |rep| (cond, ci, n, rep)))
        .collect();

    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(condition, config_index, n, rep))| {
            let mut rng = replicate_rng(grid.master_seed, cell as u64);
            let mut row = SimulationRow {
                condition,
                config_index,
                n,
                rep,
                sensitivity: None,
                specificity: None,
                edge_correlation: None,
                strength_correlation: None,
                closeness_correlation: None,
                betweenness_correlation: None,
                edge_count: None,
                converged: false,
                error: None,
            };
            let fitted = sample_with_correlation(&sigma, grid.truth.labels(), n, &mut rng)
                .and_then(|d| match grid.generator {
                    Generator::Continuous => Ok(d),
                    Generator::Ordinal { levels, thresholds } => {
                        ordinalize_with(&d, levels, thresholds, Some(&mut rng))
                    }
                })
                .and_then(|d| estimate(&d, &grid.configs[config_index]));
            match fitted {
                Ok(est) => {
                    let m = compare_networks(&grid.truth, &est.network).expect("same dimension");
                    let cent = centrality_table(&est.network);
                    let cor = |which| pearson(truth_centrality.index(which), cent.index(which));
                    row.sensitivity = m.sensitivity;
                    row.specificity = m.specificity;
                    row.edge_correlation = m.edge_correlation;
                    row.strength_correlation = cor(CentralityIndex::Strength);
                    row.closeness_correlation = cor(CentralityIndex::Closeness);
                    row.betweenness_correlation = cor(CentralityIndex::Betweenness);
                    row.edge_count = Some(est.network.edge_count());
                    row.converged = est.trace.converged.iter().all(|&c| c);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(SimulationResult { rows, master_seed: grid.master_seed })
}
