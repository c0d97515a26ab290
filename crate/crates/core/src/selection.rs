//! EBIC model selection over the graphical-lasso path, and unregularized
//! refitting of a selected edge set.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::glasso::{glasso_fit, lambda_path, precision_to_pcor, GlassoOptions, PcorNetwork, PrecisionMatrix};
use crate::numeric::{log_det_pd, trace_product};

/// EBIC values within this distance of the minimum count as ties; ties go
/// to the largest lambda (the sparsest candidate).
pub const EBIC_TIE_TOLERANCE: f64 = 1e-10;

/// Guidance attached to every empty selected network.
pub const EMPTY_NETWORK_WARNING: &str = "the selected network has no edges; this usually means the \
    sample is too small for the number of variables, or the variables are only weakly related";

/// Gaussian log-likelihood without the additive constant:
/// `L = n/2 * (log det K - trace(S K))`.
pub fn gaussian_loglik(k: &DMatrix<f64>, s: &DMatrix<f64>, n: usize) -> f64 {
    match log_det_pd(k) {
        Some(ld) => 0.5 * n as f64 * (ld - trace_product(s, k)),
        None => f64::NEG_INFINITY,
    }
}

/// `EBIC = -2 L + E log(n) + 4 gamma E log(P)`.
pub fn ebic(loglik: f64, edges: usize, n: usize, p: usize, gamma: f64) -> f64 {
    let e = edges as f64;
    -2.0 * loglik + e * (n as f64).ln() + 4.0 * gamma * e * (p as f64).ln()
}

/// Every network along the lambda path with its fit statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    /// Ascending.
    pub lambdas: Vec<f64>,
    pub networks: Vec<PcorNetwork>,
    pub edge_counts: Vec<usize>,
    pub logliks: Vec<f64>,
    pub ebic: Vec<f64>,
    /// False where the fit failed to converge; such entries are never selected.
    pub converged: Vec<bool>,
    pub gamma: f64,
    pub n: usize,
    pub p: usize,
    pub selected_index: usize,
    pub warnings: Vec<String>,
}

impl SelectionTrace {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn selected_network(&self) -> &PcorNetwork {
        &self.networks[self.selected_index]
    }

    pub fn selected_lambda(&self) -> f64 {
        self.lambdas[self.selected_index]
    }

    /// EBIC of every path entry at another gamma (`inf` where not converged).
    pub fn ebic_at(&self, gamma: f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                if self.converged[i] {
                    ebic(self.logliks[i], self.edge_counts[i], self.n, self.p, gamma)
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    /// Index that minimizes EBIC at `gamma`.
    pub fn selected_at(&self, gamma: f64) -> usize {
        select_min(&self.ebic_at(gamma))
    }

    /// The same path scored at a different gamma.
    pub fn rescored(&self, gamma: f64) -> SelectionTrace {
        let ebic = self.ebic_at(gamma);
        let selected_index = select_min(&ebic);
        SelectionTrace { ebic, gamma, selected_index, ..self.clone() }
    }
}

/// Minimum with ties (within [`EBIC_TIE_TOLERANCE`]) resolved toward the
/// highest index. Values are ordered by ascending lambda.
fn select_min(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .rposition(|&v| v <= min + EBIC_TIE_TOLERANCE)
        .unwrap_or(values.len().saturating_sub(1))
}

/// Settings for [`ebic_glasso_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions {
    pub gamma: f64,
    pub n_lambda: usize,
    pub lambda_ratio: f64,
    pub glasso: GlassoOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { gamma: 0.5, n_lambda: 100, lambda_ratio: 0.01, glasso: GlassoOptions::default() }
    }
}

/// Graphical lasso over the default path (100 values, ratio 0.01), selecting
/// by EBIC with hyperparameter `gamma`.
pub fn ebic_glasso(s: &CorrelationMatrix, n: usize, gamma: f64) -> Result<SelectionTrace> {
    ebic_glasso_with(s, n, &SelectionOptions { gamma, ..Default::default() })
}

/// Fits every lambda on the path from largest to smallest, warm-starting
/// each fit at the previous solution, and scores each fit by EBIC.
pub fn ebic_glasso_with(
    s: &CorrelationMatrix,
    n: usize,
    options: &SelectionOptions,
) -> Result<SelectionTrace> {
    let p = s.dim();
    if !(options.gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be nonnegative, got {}", options.gamma)));
    }
    if n < 1 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let labels = s.labels.clone();
    let mut warnings = Vec::new();
    if n < p {
        let msg = format!(
            "sample size ({n}) is smaller than the number of variables ({p}); \
             expect a very sparse or empty network"
        );
        warn!("{msg}");
        warnings.push(msg);
    }

    let lambdas = match lambda_path(s, options.n_lambda, options.lambda_ratio) {
        Ok(path) => path,
        Err(Error::AllZeroCorrelations) => {
            // Nothing to penalize: the only candidate is the empty network.
            let k = DMatrix::identity(p, p);
            let loglik = gaussian_loglik(&k, &s.entries, n);
            warnings.push(EMPTY_NETWORK_WARNING.to_string());
            return Ok(SelectionTrace {
                lambdas: vec![0.0],
                networks: vec![PcorNetwork::empty(labels)],
                edge_counts: vec![0],
                logliks: vec![loglik],
                ebic: vec![ebic(loglik, 0, n, p, options.gamma)],
                converged: vec![true],
                gamma: options.gamma,
                n,
                p,
                selected_index: 0,
                warnings,
            });
        }
        Err(e) => return Err(e),
    };

    let m = lambdas.len();
    let mut networks = vec![PcorNetwork::empty(labels.clone()); m];
    let mut edge_counts = vec![0; m];
    let mut logliks = vec![f64::NAN; m];
    let mut converged = vec![false; m];
    let mut previous: Option<PrecisionMatrix> = None;
    for idx in (0..m).rev() {
        match glasso_fit(s, lambdas[idx], &options.glasso, previous.as_ref()) {
            Ok(fit) => {
                networks[idx] = precision_to_pcor(&fit.k, &labels);
                edge_counts[idx] = fit.edge_count();
                logliks[idx] = gaussian_loglik(&fit.k, &s.entries, n);
                converged[idx] = true;
                previous = Some(fit);
            }
            Err(Error::NotConverged { iterations }) => {
                let msg = format!(
                    "lambda = {:.6e} did not converge after {iterations} sweeps; excluded from selection",
                    lambdas[idx]
                );
                warn!("{msg}");
                warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    if !converged.iter().any(|&c| c) {
        return Err(Error::NotConverged { iterations: options.glasso.max_iter });
    }
    let mut trace = SelectionTrace {
        lambdas,
        networks,
        edge_counts,
        logliks,
        ebic: Vec::new(),
        converged,
        gamma: options.gamma,
        n,
        p,
        selected_index: 0,
        warnings,
    };
    trace.ebic = trace.ebic_at(options.gamma);
    trace.selected_index = select_min(&trace.ebic);
    if trace.edge_counts[trace.selected_index] == 0 {
        trace.warnings.push(EMPTY_NETWORK_WARNING.to_string());
    }
    Ok(trace)
}

fn validate_mask(mask: &DMatrix<bool>, p: usize) -> Result<()> {
    if mask.nrows() != p || mask.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: mask.nrows() });
    }
    for i in 0..p {
        if mask[(i, i)] {
            return Err(Error::InvalidInput("edge mask must have a false diagonal".into()));
        }
        for j in 0..i {
            if mask[(i, j)] != mask[(j, i)] {
                return Err(Error::InvalidInput("edge mask must be symmetric".into()));
            }
        }
    }
    Ok(())
}

fn masked_regression(
    w: &DMatrix<f64>,
    s: &DMatrix<f64>,
    mask: &DMatrix<bool>,
    j: usize,
) -> Result<(Vec<usize>, DVector<f64>)> {
    let p = w.nrows();
    let active: Vec<usize> = (0..p).filter(|&i| i != j && mask[(i, j)]).collect();
    if active.is_empty() {
        return Ok((active, DVector::zeros(0)));
    }
    let m = active.len();
    let w11 = DMatrix::from_fn(m, m, |a, b| w[(active[a], active[b])]);
    let rhs = DVector::from_fn(m, |a, _| s[(active[a], j)]);
    let chol = w11.cholesky().ok_or_else(|| {
        Error::InfeasibleMask(format!("covariance block for node {j} lost positive definiteness"))
    })?;
    Ok((active, chol.solve(&rhs)))
}

/// Maximum-likelihood precision matrix with k_ij fixed at zero wherever
/// `mask` is false, by cyclic constrained regressions on the implied
/// covariance W. At convergence W matches S on the diagonal and on every
/// masked entry.
pub fn refit_precision(s: &CorrelationMatrix, mask: &DMatrix<bool>, tol: f64) -> Result<PrecisionMatrix> {
    const MAX_SWEEPS: usize = 10_000;
    let p = s.dim();
    validate_mask(mask, p)?;
    let sm = &s.entries;
    let mut w = sm.clone();
    // Off-mask entries of W start from the independence model.
    for i in 0..p {
        for j in 0..p {
            if i != j && !mask[(i, j)] {
                w[(i, j)] = 0.0;
            }
        }
    }
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let (active, beta) = masked_regression(&w, sm, mask, j)?;
            for i in (0..p).filter(|&i| i != j) {
                let v: f64 = active.iter().zip(beta.iter()).map(|(&a, b)| w[(i, a)] * b).sum();
                max_change = max_change.max((w[(i, j)] - v).abs());
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        if max_change <= tol {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NotConverged { iterations: sweeps });
        }
    }
    let mut k = DMatrix::zeros(p, p);
    for j in 0..p {
        let (active, beta) = masked_regression(&w, sm, mask, j)?;
        let explained: f64 = active.iter().zip(beta.iter()).map(|(&a, b)| sm[(a, j)] * b).sum();
        let kjj = 1.0 / (sm[(j, j)] - explained);
        if !(kjj > 0.0) || !kjj.is_finite() {
            return Err(Error::InfeasibleMask(format!("non-positive residual variance at node {j}")));
        }
        k[(j, j)] = kjj;
        for (a, &i) in active.iter().enumerate() {
            k[(i, j)] = -beta[a] * kjj;
        }
    }
    let k = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            k[(i, i)]
        } else {
            0.5 * (k[(i, j)] + k[(j, i)])
        }
    });
    if k.clone().cholesky().is_none() {
        return Err(Error::InfeasibleMask("constrained estimate is not positive definite".into()));
    }
    Ok(PrecisionMatrix { k, lambda: 0.0, converged: true, iterations: sweeps, implied_cov: w })
}

/// Unregularized refit of a selected edge set, as a partial-correlation network.
pub fn refit_unregularized(
    s: &CorrelationMatrix,
    mask: &DMatrix<bool>,
    labels: &[String],
    tol: f64,
) -> Result<PcorNetwork> {
    let fit = refit_precision(s, mask, tol)?;
    Ok(precision_to_pcor(&fit.k, labels))
}
