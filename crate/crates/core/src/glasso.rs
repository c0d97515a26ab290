//! L1-penalized Gaussian precision-matrix estimation (graphical lasso) and
//! the conversion from precision matrices to partial-correlation networks.
//!
//! The solver maximizes
//!
//! ```text
//! log det K - trace(S K) - lambda * sum_{i != j} |k_ij|
//! ```
//!
//! by block coordinate ascent on K, one row/column at a time. With the
//! other rows fixed, the off-diagonal block solves a lasso problem
//!
//! ```text
//! min_b  0.5 * w_jj * b' M b + s_j' b + lambda * |b|_1,    M = inv(K_11)
//! ```
//!
//! and the diagonal entry has the closed form `1 / w_jj + b' M b`, where
//! `w_jj = s_jj` (plus lambda when the diagonal is penalized). Every block
//! step is an exact (or warm-started) minimization, so the objective never
//! decreases across sweeps and K stays positive definite throughout.
//! `M` and the implied covariance W = inv(K) are kept current by rank-one
//! updates and refreshed by a Cholesky inverse after each sweep.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::numeric::{log_det_pd, trace_product};

/// Off-diagonal |k_ij| below this multiple of machine epsilon (relative to
/// sqrt(k_ii k_jj)) are snapped to exactly zero.
const ZERO_SNAP: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlassoOptions {
    /// Relative convergence tolerance (see [`glasso_fit`]).
    pub tol: f64,
    pub max_iter: usize,
    /// Penalize the diagonal of K as well. Off by default.
    pub penalize_diagonal: bool,
}

impl Default for GlassoOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_iter: 10_000, penalize_diagonal: false }
    }
}

/// Fitted precision matrix at one penalty value.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    pub k: DMatrix<f64>,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    /// W = inv(K). Its diagonal equals diag(S), plus lambda when the
    /// diagonal is penalized.
    pub implied_cov: DMatrix<f64>,
}

impl PrecisionMatrix {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// Number of nonzero upper-triangle off-diagonal entries.
    pub fn edge_count(&self) -> usize {
        let p = self.dim();
        (0..p).map(|i| ((i + 1)..p).filter(|&j| self.k[(i, j)] != 0.0).count()).sum()
    }
}

/// Weighted undirected graph of partial correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct PcorNetwork {
    weights: DMatrix<f64>,
    labels: Vec<String>,
}

impl PcorNetwork {
    /// Validates symmetry, zero diagonal and the [-1, 1] range.
    pub fn new(weights: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let p = weights.nrows();
        if weights.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: weights.ncols() });
        }
        if labels.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: labels.len() });
        }
        for i in 0..p {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("diagonal weight {i} is not zero")));
            }
            for j in 0..i {
                let w = weights[(i, j)];
                if !w.is_finite() || w.abs() > 1.0 {
                    return Err(Error::InvalidInput(format!("weight ({i}, {j}) outside [-1, 1]")));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidInput(format!("weights not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { weights, labels })
    }

    pub fn empty(labels: Vec<String>) -> Self {
        let p = labels.len();
        Self { weights: DMatrix::zeros(p, p), labels }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.weights[(i, j)] != 0.0
    }

    /// Upper-triangle entries in row-major order: (0,1), (0,2), ..., (p-2,p-1).
    pub fn upper_triangle(&self) -> Vec<f64> {
        let p = self.dim();
        (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).map(|(i, j)| self.weights[(i, j)]).collect()
    }

    /// Nonzero edges as (i, j, weight) with i < j.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let p = self.dim();
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                let w = self.weights[(i, j)];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Symmetric boolean edge mask.
    pub fn edge_mask(&self) -> DMatrix<bool> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.has_edge(i, j))
    }

    /// Same graph with nodes reordered: node `i` of the result is node
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = self.dim();
        let weights = DMatrix::from_fn(p, p, |i, j| self.weights[(perm[i], perm[j])]);
        let labels = perm.iter().map(|&i| self.labels[i].clone()).collect();
        Self { weights, labels }
    }
}

/// Node-wise regression fit: row i regresses variable i on all others.
#[derive(Debug, Clone, PartialEq)]
pub struct NodewiseFit {
    pub slopes: DMatrix<f64>,
    pub residual_sd: Vec<f64>,
    pub intercepts: Vec<f64>,
}

/// Log-spaced penalty values from `ratio * lambda_max` to `lambda_max`,
/// ascending, where `lambda_max` is the largest absolute off-diagonal
/// correlation (the smallest penalty giving an empty network).
pub fn lambda_path(s: &CorrelationMatrix, n_lambda: usize, ratio: f64) -> Result<Vec<f64>> {
    if n_lambda < 2 {
        return Err(Error::InvalidInput(format!("n_lambda must be at least 2, got {n_lambda}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!("lambda ratio must be in (0, 1), got {ratio}")));
    }
    let lambda_max = s.max_abs_off_diagonal();
    if lambda_max == 0.0 {
        return Err(Error::AllZeroCorrelations);
    }
    let lo = (ratio * lambda_max).ln();
    let hi = lambda_max.ln();
    let step = (hi - lo) / (n_lambda - 1) as f64;
    let mut path: Vec<f64> = (0..n_lambda).map(|i| (lo + step * i as f64).exp()).collect();
    path[0] = ratio * lambda_max;
    path[n_lambda - 1] = lambda_max;
    Ok(path)
}

fn penalty(k: &DMatrix<f64>, lambda: f64, penalize_diagonal: bool) -> f64 {
    let p = k.nrows();
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j || penalize_diagonal {
                sum += k[(i, j)].abs();
            }
        }
    }
    lambda * sum
}

/// `log det K - trace(S K) - lambda * sum_{i != j} |k_ij|`.
///
/// Returns `-inf` when K is not positive definite.
pub fn penalized_objective(k: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64) -> f64 {
    penalized_objective_with(k, s, lambda, false)
}

/// [`penalized_objective`] with an optional diagonal penalty.
pub fn penalized_objective_with(
    k: &DMatrix<f64>,
    s: &DMatrix<f64>,
    lambda: f64,
    penalize_diagonal: bool,
) -> f64 {
    match log_det_pd(k) {
        Some(ld) => ld - trace_product(s, k) - penalty(k, lambda, penalize_diagonal),
        None => f64::NEG_INFINITY,
    }
}

/// Largest violation of the optimality conditions of the penalized
/// likelihood at K: with W = inv(K), each off-diagonal entry needs
/// `w_ij - s_ij = lambda * sign(k_ij)` when k_ij != 0 and
/// `|w_ij - s_ij| <= lambda` otherwise; diagonal entries need
/// `w_ii = s_ii` (plus lambda when penalized).
pub fn kkt_residual(k: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64, penalize_diagonal: bool) -> f64 {
    let Some(w) = k.clone().cholesky().map(|c| c.inverse()) else {
        return f64::INFINITY;
    };
    let p = k.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let g = w[(i, j)] - s[(i, j)];
            let v = if i == j {
                if penalize_diagonal {
                    (g - lambda).abs()
                } else {
                    g.abs()
                }
            } else if k[(i, j)] != 0.0 {
                (g - lambda * k[(i, j)].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
    }
    worst
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn others(p: usize, j: usize) -> Vec<usize> {
    (0..p).filter(|&i| i != j).collect()
}

/// Coordinate descent for `min 0.5 b'Ab + c'b + lambda |b|_1`, warm-started
/// at `b`.
fn lasso_cd(a: &DMatrix<f64>, c: &DVector<f64>, lambda: f64, b: &mut DVector<f64>) {
    let m = b.len();
    let mut ab = a * &*b;
    for _ in 0..10_000 {
        let mut max_delta: f64 = 0.0;
        for k in 0..m {
            let akk = a[(k, k)];
            let old = b[k];
            let r = c[k] + ab[k] - akk * old;
            let new = -soft_threshold(r, lambda) / akk;
            let delta = new - old;
            if delta != 0.0 {
                b[k] = new;
                for i in 0..m {
                    ab[i] += a[(i, k)] * delta;
                }
                max_delta = max_delta.max(delta.abs() * akk.sqrt());
            }
        }
        if max_delta < 1e-13 {
            break;
        }
    }
}

fn mean_abs_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    if p < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                sum += m[(i, j)].abs();
            }
        }
    }
    sum / (p * (p - 1)) as f64
}

/// Per-sweep record of a fit; used to check objective monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub objective: Vec<f64>,
}

/// Graphical lasso at penalty `lambda`.
///
/// Sweeps stop once the mean absolute change of the off-diagonal implied
/// covariance is at most `tol * mean|s_ij|` and the KKT residual
/// ([`kkt_residual`]) is at most the same bound. A warm start only changes
/// the number of sweeps.
pub fn glasso_fit(
    s: &CorrelationMatrix,
    lambda: f64,
    options: &GlassoOptions,
    warm_start: Option<&PrecisionMatrix>,
) -> Result<PrecisionMatrix> {
    glasso_fit_matrix(&s.entries, lambda, options, warm_start).map(|(k, _)| k)
}

/// [`glasso_fit`] on a raw symmetric matrix, also returning the objective
/// after every sweep.
pub fn glasso_fit_matrix(
    s: &DMatrix<f64>,
    lambda: f64,
    options: &GlassoOptions,
    warm_start: Option<&PrecisionMatrix>,
) -> Result<(PrecisionMatrix, FitTrace)> {
    let p = s.nrows();
    if s.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: s.ncols() });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if lambda == 0.0 && s.clone().cholesky().is_none() {
        return Err(Error::SingularInput);
    }
    let diag_pen = if options.penalize_diagonal { lambda } else { 0.0 };
    let target: Vec<f64> = (0..p).map(|j| s[(j, j)] + diag_pen).collect();
    if target.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidInput("diagonal of S must be positive".into()));
    }

    let (mut k, mut w) = match warm_start.filter(|ws| ws.dim() == p) {
        Some(ws) => (ws.k.clone(), ws.implied_cov.clone()),
        None => (
            DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 / target[i] } else { 0.0 }),
            DMatrix::from_fn(p, p, |i, j| if i == j { target[i] } else { 0.0 }),
        ),
    };

    let scale = mean_abs_off_diagonal(s);
    let bound = options.tol * scale.max(f64::MIN_POSITIVE);
    let objective = |k: &DMatrix<f64>| penalized_objective_with(k, s, lambda, options.penalize_diagonal);
    let mut trace = FitTrace { objective: vec![objective(&k)] };

    if p == 1 {
        k[(0, 0)] = 1.0 / target[0];
        w[(0, 0)] = target[0];
        return Ok((
            PrecisionMatrix { k, lambda, converged: true, iterations: 0, implied_cov: w },
            trace,
        ));
    }

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < options.max_iter {
        sweeps += 1;
        let w_before = w.clone();
        for j in 0..p {
            let idx = others(p, j);
            let m = idx.len();
            let w12 = DVector::from_fn(m, |a, _| w[(idx[a], j)]);
            let w22 = w[(j, j)];
            // inv(K_11) from the current inverse of K.
            let inv_k11 = DMatrix::from_fn(m, m, |a, b| {
                w[(idx[a], idx[b])] - w12[a] * w12[b] / w22
            });
            let a = &inv_k11 * target[j];
            let c = DVector::from_fn(m, |a, _| s[(idx[a], j)]);
            let mut beta = DVector::from_fn(m, |a, _| k[(idx[a], j)]);
            lasso_cd(&a, &c, lambda, &mut beta);
            let mb = &inv_k11 * &beta;
            let kjj = 1.0 / target[j] + beta.dot(&mb);
            for (a, &i) in idx.iter().enumerate() {
                k[(i, j)] = beta[a];
                k[(j, i)] = beta[a];
            }
            k[(j, j)] = kjj;
            // Rank-one update of W = inv(K).
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    w[(ia, ib)] = inv_k11[(a, b)] + mb[a] * mb[b] * target[j];
                }
                w[(ia, j)] = -mb[a] * target[j];
                w[(j, ia)] = -mb[a] * target[j];
            }
            w[(j, j)] = target[j];
        }
        match k.clone().cholesky() {
            Some(chol) => w = chol.inverse(),
            None => return Err(Error::NotPositiveDefinite { min_eigenvalue: f64::NAN }),
        }
        let obj = objective(&k);
        debug_assert!(
            obj >= trace.objective.last().copied().unwrap_or(f64::NEG_INFINITY)
                - 1e-9 * (1.0 + obj.abs()),
            "objective decreased: {obj} after {:?}",
            trace.objective.last()
        );
        trace.objective.push(obj);

        let mut change = 0.0;
        for i in 0..p {
            for jj in 0..p {
                if i != jj {
                    change += (w[(i, jj)] - w_before[(i, jj)]).abs();
                }
            }
        }
        change /= (p * (p - 1)) as f64;
        if change <= bound && kkt_residual(&k, s, lambda, options.penalize_diagonal) <= bound {
            converged = true;
            break;
        }
    }

    for i in 0..p {
        for j in 0..p {
            if i != j && k[(i, j)].abs() < ZERO_SNAP * (k[(i, i)] * k[(j, j)]).sqrt() {
                k[(i, j)] = 0.0;
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations: sweeps });
    }
    Ok((
        PrecisionMatrix { k, lambda, converged, iterations: sweeps, implied_cov: w },
        trace,
    ))
}

/// Partial correlations `-k_ij / sqrt(k_ii k_jj)` with a zero diagonal.
/// Exact zeros in K stay exact zeros.
pub fn precision_to_pcor(k: &DMatrix<f64>, labels: &[String]) -> PcorNetwork {
    let p = k.nrows();
    let mut weights = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            if k[(i, j)] != 0.0 {
                let r = (-k[(i, j)] / (k[(i, i)] * k[(j, j)]).sqrt()).clamp(-1.0, 1.0);
                weights[(i, j)] = r;
                weights[(j, i)] = r;
            }
        }
    }
    PcorNetwork { weights, labels: labels.to_vec() }
}

/// Ordinary least squares of every variable on all others (with intercept),
/// on the complete cases.
pub fn nodewise_fit(data: &DataMatrix) -> Result<NodewiseFit> {
    let rows = data.complete_cases();
    let n = rows.len();
    let p = data.n_cols();
    if n <= p {
        return Err(Error::InvalidInput(format!(
            "node-wise regression needs more complete rows ({n}) than variables ({p})"
        )));
    }
    let means: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|&r| data.value(r, j)).sum::<f64>() / n as f64)
        .collect();
    let x = DMatrix::from_fn(n, p, |r, j| data.value(rows[r], j) - means[j]);
    let gram = x.transpose() * &x;

    let mut slopes = DMatrix::zeros(p, p);
    let mut residual_sd = vec![0.0; p];
    let mut intercepts = vec![0.0; p];
    for i in 0..p {
        let idx = others(p, i);
        let g = DMatrix::from_fn(p - 1, p - 1, |a, b| gram[(idx[a], idx[b])]);
        let rhs = DVector::from_fn(p - 1, |a, _| gram[(idx[a], i)]);
        let chol = g.cholesky().ok_or(Error::RankDeficient { node: i })?;
        let beta = chol.solve(&rhs);
        let rss = gram[(i, i)] - beta.dot(&rhs);
        if !(rss > 0.0) {
            return Err(Error::RankDeficient { node: i });
        }
        residual_sd[i] = (rss / n as f64).sqrt();
        let mut intercept = means[i];
        for (a, &j) in idx.iter().enumerate() {
            slopes[(i, j)] = beta[a];
            intercept -= beta[a] * means[j];
        }
        intercepts[i] = intercept;
    }
    Ok(NodewiseFit { slopes, residual_sd, intercepts })
}

/// Unregularized partial correlations from node-wise regressions:
/// `beta_ij * sd(e_j) / sd(e_i)`, averaged over both directions.
pub fn nodewise_pcor(data: &DataMatrix) -> Result<PcorNetwork> {
    let fit = nodewise_fit(data)?;
    let p = data.n_cols();
    let sd = &fit.residual_sd;
    let weights = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            0.0
        } else {
            let a = fit.slopes[(i, j)] * sd[j] / sd[i];
            let b = fit.slopes[(j, i)] * sd[i] / sd[j];
            (0.5 * (a + b)).clamp(-1.0, 1.0)
        }
    });
    let weights = DMatrix::from_fn(p, p, |i, j| if i <= j { weights[(i, j)] } else { weights[(j, i)] });
    PcorNetwork::new(weights, data.labels().to_vec())
}
