//! Resampling: nonparametric and case-dropping bootstraps, the
//! CS-coefficient, and the two-sample permutation comparison.
//!
//! Replicate `k` draws its rows from `replicate_rng(master_seed, k)`, so a
//! replicate never depends on how many threads ran or in which order.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Scale};
use crate::error::{Error, Result};
use crate::glasso::PcorNetwork;
use crate::network::{centrality_table, CentralityIndex, CentralityTable};
use crate::numeric::{pearson, quantile_type7, replicate_rng};
use crate::pipeline::{estimate, EstimatorConfig};

/// Fraction of failed replicates above which a bootstrap is abandoned.
pub const MAX_FAILURE_FRACTION: f64 = 0.25;

/// Retained proportions of the default case-dropping grid.
pub const DEFAULT_PROPORTIONS: [f64; 7] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];

pub const CS_STABLE: f64 = 0.5;
pub const CS_ACCEPTABLE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootKind {
    Nonparametric,
    #[serde(rename = "case")]
    CaseDropping,
}

impl BootKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BootKind::Nonparametric => "nonparametric",
            BootKind::CaseDropping => "case",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub index: usize,
    /// Retained fraction of rows (1.0 for the nonparametric bootstrap).
    pub proportion: f64,
    pub n_rows: usize,
    /// Number of distinct original rows in the sample.
    pub n_distinct: usize,
    pub network: PcorNetwork,
    pub centrality: CentralityTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub index: usize,
    pub proportion: f64,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub kind: BootKind,
    pub requested: usize,
    pub replicates: Vec<Replicate>,
    pub failures: Vec<ReplicateFailure>,
    pub master_seed: u64,
    pub config: EstimatorConfig,
    /// Distinct retained proportions, in the order given.
    pub proportions: Vec<f64>,
    pub n_rows: usize,
    pub original: PcorNetwork,
    pub original_centrality: CentralityTable,
    pub warnings: Vec<String>,
}

impl BootstrapResult {
    fn require(&self, kind: BootKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongKind { expected: kind.as_str() })
        }
    }
}

enum Outcome {
    Done(Replicate),
    Failed(ReplicateFailure),
}

fn run_replicate(
    data: &DataMatrix,
    config: &EstimatorConfig,
    index: usize,
    proportion: f64,
    rows: Vec<usize>,
) -> Outcome {
    let mut seen = rows.clone();
    seen.sort_unstable();
    seen.dedup();
    let fit = data.select_rows(&rows).and_then(|sub| estimate(&sub, config));
    match fit {
        Ok(est) => Outcome::Done(Replicate {
            index,
            proportion,
            n_rows: rows.len(),
            n_distinct: seen.len(),
            centrality: centrality_table(&est.network),
            network: est.network,
        }),
        Err(error) => Outcome::Failed(ReplicateFailure { index, proportion, error }),
    }
}

fn collect_outcomes(
    outcomes: Vec<Outcome>,
    requested: usize,
) -> Result<(Vec<Replicate>, Vec<ReplicateFailure>)> {
    let mut replicates = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Done(r) => replicates.push(r),
            Outcome::Failed(f) => {
                log::debug!("replicate {} failed: {}", f.index, f.error);
                failures.push(f)
            }
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * requested as f64 {
        return Err(Error::TooManyFailures { failed: failures.len(), total: requested });
    }
    Ok((replicates, failures))
}

/// Resamples all N rows with replacement `n_boots` times and re-estimates
/// the network on each sample.
pub fn nonparametric_boot(
    data: &DataMatrix,
    config: &EstimatorConfig,
    n_boots: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let n = data.n_rows();
    let outcomes: Vec<Outcome> = (0..n_boots)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, k as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            run_replicate(data, config, k, 1.0, rows)
        })
        .collect();
    let (replicates, failures) = collect_outcomes(outcomes, n_boots)?;
    let original = estimate(data, config)?;
    Ok(BootstrapResult {
        kind: BootKind::Nonparametric,
        requested: n_boots,
        replicates,
        failures,
        master_seed: seed,
        config: *config,
        proportions: vec![1.0],
        n_rows: n,
        original_centrality: centrality_table(&original.network),
        original: original.network,
        warnings: original.warnings,
    })
}

/// Level of replicate `k` when `n_boots` replicates are split over
/// `levels` proportions in contiguous, equally sized blocks.
pub fn level_of_replicate(k: usize, n_boots: usize, levels: usize) -> usize {
    k * levels / n_boots.max(1)
}

/// Subsamples without replacement at each retained proportion and
/// re-estimates the network. Replicates are split evenly over the
/// proportions (block sizes differ by at most one).
pub fn case_dropping_boot(
    data: &DataMatrix,
    config: &EstimatorConfig,
    proportions: &[f64],
    n_boots: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if proportions.is_empty() || proportions.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
        return Err(Error::InvalidInput("retained proportions must lie in (0, 1]".into()));
    }
    let n = data.n_rows();
    let mut warnings = Vec::new();
    let smallest = proportions.iter().copied().fold(f64::INFINITY, f64::min);
    if (smallest * n as f64).round() < (data.n_cols() + 1) as f64 {
        warnings.push(format!(
            "smallest retained sample ({} rows) is below the number of variables plus one",
            (smallest * n as f64).round()
        ));
    }
    let outcomes: Vec<Outcome> = (0..n_boots)
        .into_par_iter()
        .map(|k| {
            let q = proportions[level_of_replicate(k, n_boots, proportions.len())];
            let m = ((q * n as f64).round() as usize).clamp(1, n);
            let mut rng = replicate_rng(seed, k as u64);
            let mut rows = index::sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            run_replicate(data, config, k, q, rows)
        })
        .collect();
    let (replicates, failures) = collect_outcomes(outcomes, n_boots)?;
    let original = estimate(data, config)?;
    warnings.extend(original.warnings);
    Ok(BootstrapResult {
        kind: BootKind::CaseDropping,
        requested: n_boots,
        replicates,
        failures,
        master_seed: seed,
        config: *config,
        proportions: proportions.to_vec(),
        n_rows: n,
        original_centrality: centrality_table(&original.network),
        original: original.network,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeInterval {
    pub i: usize,
    pub j: usize,
    pub original: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

fn interval(values: &mut [f64], level: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    (quantile_type7(values, a), quantile_type7(values, 1.0 - a))
}

fn check_level(level: f64) -> Result<()> {
    if (0.0..=1.0).contains(&level) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("level must lie in [0, 1], got {level}")))
    }
}

/// Percentile intervals (type-7 quantiles) for every edge, upper triangle
/// in row-major order.
pub fn edge_quantile_intervals(res: &BootstrapResult, level: f64) -> Result<Vec<EdgeInterval>> {
    res.require(BootKind::Nonparametric)?;
    check_level(level)?;
    if res.replicates.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 successful replicates".into()));
    }
    let p = res.original.dim();
    let mut out = Vec::with_capacity(p * (p.saturating_sub(1)) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            let mut w: Vec<f64> = res.replicates.iter().map(|r| r.network.weight(i, j)).collect();
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let (lo, hi) = interval(&mut w, level);
            out.push(EdgeInterval { i, j, original: res.original.weight(i, j), mean, lo, hi });
        }
    }
    Ok(out)
}

/// What a difference test compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DifferenceTarget {
    EdgeVsEdge { a: (usize, usize), b: (usize, usize) },
    StrengthVsStrength { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTest {
    pub lo: f64,
    pub hi: f64,
    pub significant: bool,
}

/// Bootstrapped difference `a - b`; significant when its percentile
/// interval excludes zero.
pub fn difference_test(
    res: &BootstrapResult,
    target: DifferenceTarget,
    level: f64,
) -> Result<DifferenceTest> {
    res.require(BootKind::Nonparametric)?;
    check_level(level)?;
    if res.replicates.is_empty() {
        return Err(Error::InvalidInput("no successful replicates".into()));
    }
    let p = res.original.dim();
    let check = |i: usize| {
        if i < p {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: p })
        }
    };
    let mut diffs: Vec<f64> = match target {
        DifferenceTarget::EdgeVsEdge { a, b } => {
            for &(i, j) in &[a, b] {
                check(i)?;
                check(j)?;
                if i == j {
                    return Err(Error::InvalidInput(format!("({i}, {j}) is not an edge")));
                }
            }
            res.replicates
                .iter()
                .map(|r| r.network.weight(a.0, a.1) - r.network.weight(b.0, b.1))
                .collect()
        }
        DifferenceTarget::StrengthVsStrength { a, b } => {
            check(a)?;
            check(b)?;
            res.replicates.iter().map(|r| r.centrality.strength[a] - r.centrality.strength[b]).collect()
        }
    };
    let (lo, hi) = interval(&mut diffs, level);
    Ok(DifferenceTest { lo, hi, significant: lo > 0.0 || hi < 0.0 })
}

/// Always fails: bootstrap intervals around centrality indices are not
/// offered. Stability of centralities is judged with the case-dropping
/// bootstrap instead.
pub fn centrality_intervals(_res: &BootstrapResult) -> Result<()> {
    Err(Error::CentralityIntervalsUnsupported)
}

/// Correlations of one centrality index with the full-sample index, for
/// the replicates of one retained proportion. `None` marks an undefined
/// correlation (a constant vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityLevel {
    pub proportion: f64,
    pub correlations: Vec<Option<f64>>,
}

impl StabilityLevel {
    pub fn drop_fraction(&self) -> f64 {
        round_drop(1.0 - self.proportion)
    }

    /// Mean of the defined correlations.
    pub fn mean_correlation(&self) -> Option<f64> {
        let defined: Vec<f64> = self.correlations.iter().flatten().copied().collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }

    /// Fraction of replicates with a defined correlation of at least
    /// `threshold`.
    pub fn fraction_at_least(&self, threshold: f64) -> f64 {
        if self.correlations.is_empty() {
            return 0.0;
        }
        let hits = self.correlations.iter().filter(|c| matches!(c, Some(r) if *r >= threshold)).count();
        hits as f64 / self.correlations.len() as f64
    }
}

fn round_drop(d: f64) -> f64 {
    (d * 1e9).round() / 1e9
}

/// Per-proportion correlations between replicate and full-sample index.
pub fn stability_levels(res: &BootstrapResult, which: CentralityIndex) -> Result<Vec<StabilityLevel>> {
    res.require(BootKind::CaseDropping)?;
    let original = res.original_centrality.index(which);
    Ok(res
        .proportions
        .iter()
        .map(|&q| StabilityLevel {
            proportion: q,
            correlations: res
                .replicates
                .iter()
                .filter(|r| r.proportion == q)
                .map(|r| pearson(r.centrality.index(which), original))
                .collect(),
        })
        .collect())
}

/// Largest tested drop fraction at which at least `certainty` of the
/// replicates correlate at least `cor_threshold` with the full-sample
/// index. Levels without replicates never qualify. 0 when none qualifies.
pub fn cs_from_levels(levels: &[StabilityLevel], cor_threshold: f64, certainty: f64) -> f64 {
    levels
        .iter()
        .filter(|l| !l.correlations.is_empty() && l.fraction_at_least(cor_threshold) >= certainty)
        .map(StabilityLevel::drop_fraction)
        .fold(0.0, f64::max)
}

/// CS-coefficient of one centrality index.
pub fn cs_coefficient(
    res: &BootstrapResult,
    which: CentralityIndex,
    cor_threshold: f64,
    certainty: f64,
) -> Result<f64> {
    Ok(cs_from_levels(&stability_levels(res, which)?, cor_threshold, certainty))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsRating {
    Stable,
    Acceptable,
    Unstable,
}

impl CsRating {
    pub fn of(cs: f64) -> Self {
        if cs >= CS_STABLE {
            CsRating::Stable
        } else if cs >= CS_ACCEPTABLE {
            CsRating::Acceptable
        } else {
            CsRating::Unstable
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            CsRating::Stable => "stable",
            CsRating::Acceptable => "minimally acceptable",
            CsRating::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// | sum |w_a| - sum |w_b| | over the upper triangle.
    pub stat_global_strength: f64,
    /// max over edges of |w_a - w_b|.
    pub stat_max_edge_diff: f64,
    pub p_global: f64,
    pub p_max_edge: f64,
    /// Permutations that produced both statistics.
    pub n_permutations: usize,
    pub n_failed: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Group sizes differ by more than 20% of the larger group.
pub fn unequal_group_sizes(n_a: usize, n_b: usize) -> bool {
    let (lo, hi) = (n_a.min(n_b) as f64, n_a.max(n_b) as f64);
    hi - lo > 0.2 * hi
}

fn comparison_stats(a: &PcorNetwork, b: &PcorNetwork) -> (f64, f64) {
    let wa = a.upper_triangle();
    let wb = b.upper_triangle();
    let sa: f64 = wa.iter().map(|w| w.abs()).sum();
    let sb: f64 = wb.iter().map(|w| w.abs()).sum();
    let max_edge = wa.iter().zip(&wb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ((sa - sb).abs(), max_edge)
}

/// Unifies the scales of two datasets with the same columns: ordinal
/// columns get the union of both level sets.
fn align_scales(a: &DataMatrix, b: &DataMatrix) -> Result<(DataMatrix, DataMatrix)> {
    if a.labels() != b.labels() {
        return Err(Error::ColumnMismatch);
    }
    let mut scales = Vec::with_capacity(a.n_cols());
    for (sa, sb) in a.scales().iter().zip(b.scales()) {
        scales.push(match (sa, sb) {
            (Scale::Continuous, Scale::Continuous) => Scale::Continuous,
            (Scale::Ordinal { levels: la }, Scale::Ordinal { levels: lb }) => {
                let mut levels: Vec<i64> = la.iter().chain(lb).copied().collect();
                levels.sort_unstable();
                levels.dedup();
                Scale::Ordinal { levels }
            }
            _ => return Err(Error::ColumnMismatch),
        });
    }
    Ok((a.clone().with_scales(scales.clone())?, b.clone().with_scales(scales)?))
}

/// Permutation test for a difference between the networks of two groups.
/// Rows are pooled and reassigned to groups of the original sizes; the
/// p-value of each statistic is (1 + #{permuted >= observed}) / (1 + n).
pub fn permutation_comparison(
    data_a: &DataMatrix,
    data_b: &DataMatrix,
    config: &EstimatorConfig,
    n_perm: usize,
    seed: u64,
) -> Result<ComparisonResult> {
    let (data_a, data_b) = align_scales(data_a, data_b)?;
    let (n_a, n_b) = (data_a.n_rows(), data_b.n_rows());
    let est_a = estimate(&data_a, config)?;
    let est_b = estimate(&data_b, config)?;
    let (obs_global, obs_edge) = comparison_stats(&est_a.network, &est_b.network);
    let pooled = data_a.concat_rows(&data_b)?;

    let perms: Vec<Option<(f64, f64)>> = (0..n_perm)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, k as u64);
            let mut rows: Vec<usize> = (0..n_a + n_b).collect();
            rows.shuffle(&mut rng);
            let fit = |r: &[usize]| pooled.select_rows(r).and_then(|d| estimate(&d, config));
            match (fit(&rows[..n_a]), fit(&rows[n_a..])) {
                (Ok(a), Ok(b)) => Some(comparison_stats(&a.network, &b.network)),
                _ => None,
            }
        })
        .collect();
    let ok: Vec<(f64, f64)> = perms.iter().flatten().copied().collect();
    let n_failed = n_perm - ok.len();
    if n_failed as f64 > MAX_FAILURE_FRACTION * n_perm as f64 {
        return Err(Error::TooManyFailures { failed: n_failed, total: n_perm });
    }
    let p_value = |obs: f64, pick: fn(&(f64, f64)) -> f64| {
        let tol = 1e-12 * obs.abs().max(1.0);
        let hits = ok.iter().filter(|s| pick(s) >= obs - tol).count();
        (1 + hits) as f64 / (1 + ok.len()) as f64
    };
    let mut warnings = Vec::new();
    if unequal_group_sizes(n_a, n_b) {
        warnings.push(format!(
            "group sizes differ by more than 20% ({n_a} vs {n_b}); network differences may reflect sample size"
        ));
    }
    Ok(ComparisonResult {
        stat_global_strength: obs_global,
        stat_max_edge_diff: obs_edge,
        p_global: p_value(obs_global, |s| s.0),
        p_max_edge: p_value(obs_edge, |s| s.1),
        n_permutations: ok.len(),
        n_failed,
        n_a,
        n_b,
        seed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::CorMethod;
    use crate::network::centrality_table;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn pearson_config() -> EstimatorConfig {
        EstimatorConfig { cor_method: CorMethod::Pearson, ..Default::default() }
    }

    /// Chain-like data: each column leans on the previous one.
    fn chain_data(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = replicate_rng(seed, 99);
        let mut cols: Vec<Vec<f64>> =
            (0..p).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        for r in 0..n {
            for j in 1..p {
                let prev = cols[j - 1][r];
                cols[j][r] += 0.6 * prev;
            }
        }
        DataMatrix::continuous(cols).unwrap()
    }

    fn net(p: usize, edges: &[(usize, usize, f64)]) -> PcorNetwork {
        let mut w = DMatrix::zeros(p, p);
        for &(i, j, v) in edges {
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        PcorNetwork::new(w, crate::data::default_labels(p)).unwrap()
    }

    /// Nonparametric result whose replicate weights are given directly.
    fn synthetic(weights: &[Vec<(usize, usize, f64)>], p: usize) -> BootstrapResult {
        let original = net(p, &[]);
        BootstrapResult {
            kind: BootKind::Nonparametric,
            requested: weights.len(),
            replicates: weights
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let network = net(p, e);
                    Replicate {
                        index: k,
                        proportion: 1.0,
                        n_rows: 10,
                        n_distinct: 10,
                        centrality: centrality_table(&network),
                        network,
                    }
                })
                .collect(),
            failures: vec![],
            master_seed: 0,
            config: EstimatorConfig::default(),
            proportions: vec![1.0],
            n_rows: 10,
            original_centrality: centrality_table(&original),
            original,
            warnings: vec![],
        }
    }

    #[test]
    fn identical_rows_fail_every_replicate() {
        let data = DataMatrix::continuous(vec![vec![1.0; 20], vec![2.0; 20], vec![3.0; 20]]).unwrap();
        let err = nonparametric_boot(&data, &pearson_config(), 8, 1).unwrap_err();
        assert_eq!(err, Error::TooManyFailures { failed: 8, total: 8 });
    }

    #[test]
    fn zero_boots_is_valid() {
        let res = nonparametric_boot(&chain_data(50, 4, 1), &pearson_config(), 0, 1).unwrap();
        assert!(res.replicates.is_empty() && res.failures.is_empty());
        assert_eq!(res.requested, 0);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data = chain_data(80, 4, 2);
        let a = nonparametric_boot(&data, &pearson_config(), 12, 7).unwrap();
        let b = nonparametric_boot(&data, &pearson_config(), 12, 7).unwrap();
        assert_eq!(a.replicates, b.replicates);
        let c = nonparametric_boot(&data, &pearson_config(), 12, 8).unwrap();
        assert_ne!(a.replicates, c.replicates);
        assert_eq!(a.replicates.len() + a.failures.len(), 12);
        assert!(a.replicates.iter().all(|r| r.n_rows == 80 && r.n_distinct < 80));
    }

    #[test]
    fn replicates_do_not_depend_on_the_thread_pool() {
        let data = chain_data(60, 4, 3);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| nonparametric_boot(&data, &pearson_config(), 10, 5).unwrap());
        let b = wide.install(|| nonparametric_boot(&data, &pearson_config(), 10, 5).unwrap());
        assert_eq!(a.replicates, b.replicates);
    }

    #[test]
    fn interval_examples() {
        let same = synthetic(&vec![vec![(0, 1, 0.3)]; 5], 3);
        let iv = edge_quantile_intervals(&same, 0.95).unwrap();
        assert_eq!((iv[0].lo, iv[0].hi), (0.3, 0.3));

        // Weights 1..100 scaled into the valid range.
        let ramp: Vec<_> = (1..=100).map(|v| vec![(0, 1, v as f64 / 1000.0)]).collect();
        let res = synthetic(&ramp, 3);
        let iv = edge_quantile_intervals(&res, 0.95).unwrap();
        assert!((iv[0].lo - 0.003475).abs() < 1e-12 && (iv[0].hi - 0.097525).abs() < 1e-12);
        let med = edge_quantile_intervals(&res, 0.0).unwrap();
        assert!((med[0].lo - 0.0505).abs() < 1e-12 && med[0].lo == med[0].hi);
        let full = edge_quantile_intervals(&res, 1.0).unwrap();
        assert_eq!((full[0].lo, full[0].hi), (0.001, 0.1));
        assert_eq!(iv.len(), 3);
    }

    #[test]
    fn difference_examples() {
        let ramp: Vec<_> = (1..=50).map(|v| vec![(0, 1, v as f64 / 100.0), (1, 2, 0.1)]).collect();
        let res = synthetic(&ramp, 3);
        let same = difference_test(&res, DifferenceTarget::EdgeVsEdge { a: (0, 1), b: (1, 0) }, 0.95)
            .unwrap();
        assert_eq!((same.lo, same.hi, same.significant), (0.0, 0.0, false));

        let shifted: Vec<_> = (0..20).map(|_| vec![(0, 1, 0.5), (1, 2, 0.3)]).collect();
        let res = synthetic(&shifted, 3);
        let t = difference_test(&res, DifferenceTarget::EdgeVsEdge { a: (0, 1), b: (1, 2) }, 0.95)
            .unwrap();
        assert!(t.significant && (t.lo - 0.2).abs() < 1e-12 && (t.hi - 0.2).abs() < 1e-12);

        let s = difference_test(&res, DifferenceTarget::StrengthVsStrength { a: 1, b: 0 }, 0.95)
            .unwrap();
        assert!(s.significant && (s.lo - 0.3).abs() < 1e-12);

        assert_eq!(
            difference_test(&res, DifferenceTarget::StrengthVsStrength { a: 0, b: 3 }, 0.95),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        );
    }

    #[test]
    fn kind_checks() {
        let data = chain_data(60, 4, 4);
        let case = case_dropping_boot(&data, &pearson_config(), &[0.8], 3, 1).unwrap();
        assert_eq!(
            edge_quantile_intervals(&case, 0.95).unwrap_err(),
            Error::WrongKind { expected: "nonparametric" }
        );
        let res = synthetic(&[vec![], vec![]], 3);
        assert_eq!(
            cs_coefficient(&res, CentralityIndex::Strength, 0.7, 0.95).unwrap_err(),
            Error::WrongKind { expected: "case" }
        );
        assert_eq!(centrality_intervals(&res), Err(Error::CentralityIntervalsUnsupported));
    }

    #[test]
    fn full_proportion_reproduces_the_original() {
        let data = chain_data(100, 5, 5);
        let res = case_dropping_boot(&data, &pearson_config(), &[1.0], 3, 9).unwrap();
        for r in &res.replicates {
            assert_eq!(r.network, res.original);
        }
        assert_eq!(cs_coefficient(&res, CentralityIndex::Strength, 0.7, 0.95).unwrap(), 0.0);
    }

    #[test]
    fn case_dropping_allocates_levels_evenly() {
        let data = chain_data(120, 4, 6);
        let res = case_dropping_boot(&data, &pearson_config(), &DEFAULT_PROPORTIONS, 21, 2).unwrap();
        for &q in &DEFAULT_PROPORTIONS {
            let reps: Vec<_> = res.replicates.iter().filter(|r| r.proportion == q).collect();
            assert_eq!(reps.len() + res.failures.iter().filter(|f| f.proportion == q).count(), 3);
            for r in reps {
                assert_eq!(r.n_rows, (q * 120.0).round() as usize);
                assert_eq!(r.n_distinct, r.n_rows);
            }
        }
        let again = case_dropping_boot(&data, &pearson_config(), &DEFAULT_PROPORTIONS, 21, 2).unwrap();
        assert_eq!(res.replicates, again.replicates);
    }

    fn level(q: f64, cors: &[f64]) -> StabilityLevel {
        StabilityLevel { proportion: q, correlations: cors.iter().map(|&c| Some(c)).collect() }
    }

    #[test]
    fn cs_examples() {
        let perfect: Vec<_> = DEFAULT_PROPORTIONS.iter().map(|&q| level(q, &[1.0; 10])).collect();
        assert_eq!(cs_from_levels(&perfect, 0.7, 0.95), 0.7);

        // 94 of 100 replicates clear the threshold at every level.
        let mut cors = vec![0.9; 94];
        cors.extend([0.5; 6]);
        let short: Vec<_> = DEFAULT_PROPORTIONS.iter().map(|&q| level(q, &cors)).collect();
        assert_eq!(cs_from_levels(&short, 0.7, 0.95), 0.0);

        let mut profile = Vec::new();
        for (q, c) in [(0.9, 0.95), (0.8, 0.9), (0.7, 0.8), (0.6, 0.75), (0.5, 0.6), (0.4, 0.4)] {
            profile.push(level(q, &[c; 20]));
        }
        assert_eq!(cs_from_levels(&profile, 0.7, 0.95), 0.4);
        assert_eq!(cs_from_levels(&profile, 0.85, 0.95), 0.2);

        let undefined = vec![StabilityLevel { proportion: 0.5, correlations: vec![None; 5] }];
        assert_eq!(cs_from_levels(&undefined, 0.7, 0.95), 0.0);
    }

    #[test]
    fn rating_thresholds() {
        assert_eq!(CsRating::of(0.5), CsRating::Stable);
        assert_eq!(CsRating::of(0.49), CsRating::Acceptable);
        assert_eq!(CsRating::of(0.25), CsRating::Acceptable);
        assert_eq!(CsRating::of(0.2), CsRating::Unstable);
        assert_eq!(CsRating::Acceptable.describe(), "minimally acceptable");
    }

    #[test]
    fn group_size_warning() {
        assert!(unequal_group_sizes(100, 300));
        assert!(!unequal_group_sizes(100, 110));
        assert!(!unequal_group_sizes(80, 100));
        assert!(unequal_group_sizes(79, 100));
    }

    #[test]
    fn comparison_edge_cases() {
        let a = chain_data(60, 4, 11);
        let b = chain_data(60, 4, 12);
        let none = permutation_comparison(&a, &b, &pearson_config(), 0, 3).unwrap();
        assert_eq!((none.p_global, none.p_max_edge, none.n_permutations), (1.0, 1.0, 0));

        let res = permutation_comparison(&a, &b, &pearson_config(), 19, 3).unwrap();
        assert!(res.p_global >= 1.0 / 20.0 && res.p_global <= 1.0);
        assert!(res.p_max_edge >= 1.0 / 20.0 && res.p_max_edge <= 1.0);
        assert_eq!(res, permutation_comparison(&a, &b, &pearson_config(), 19, 3).unwrap());

        let c = chain_data(60, 5, 13);
        assert_eq!(
            permutation_comparison(&a, &c, &pearson_config(), 5, 3).unwrap_err(),
            Error::ColumnMismatch
        );
    }

    proptest! {
        #[test]
        fn cs_is_monotone(
            cors in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 1..15), 7),
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
            c1 in 0.0f64..1.0, c2 in 0.0f64..1.0,
        ) {
            let levels: Vec<_> = DEFAULT_PROPORTIONS.iter().zip(&cors).map(|(&q, c)| level(q, c)).collect();
            let (tlo, thi) = (t1.min(t2), t1.max(t2));
            let (clo, chi) = (c1.min(c2), c1.max(c2));
            let cs = cs_from_levels(&levels, tlo, clo);
            prop_assert!(cs_from_levels(&levels, thi, clo) <= cs);
            prop_assert!(cs_from_levels(&levels, tlo, chi) <= cs);
            prop_assert!((0.0..=0.75).contains(&cs));
        }
    }
}
