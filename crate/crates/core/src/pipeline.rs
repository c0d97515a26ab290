//! Data -> correlation -> EBIC-selected network, as one configurable call.

use serde::{Deserialize, Serialize};

use crate::correlation::{correlate, CorMethod, CorrelationMatrix};
use crate::data::DataMatrix;
use crate::error::Result;
use crate::glasso::{GlassoOptions, PcorNetwork};
use crate::selection::{ebic_glasso_with, refit_unregularized, SelectionOptions, SelectionTrace};

/// Everything that determines an estimate besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub cor_method: CorMethod,
    pub gamma: f64,
    pub n_lambda: usize,
    pub lambda_ratio: f64,
    /// Re-estimate the selected edge set without penalty.
    pub refit: bool,
    pub glasso: GlassoOptions,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let sel = SelectionOptions::default();
        Self {
            cor_method: CorMethod::AutoMixed,
            gamma: sel.gamma,
            n_lambda: sel.n_lambda,
            lambda_ratio: sel.lambda_ratio,
            refit: false,
            glasso: sel.glasso,
        }
    }
}

impl EstimatorConfig {
    pub fn selection_options(&self) -> SelectionOptions {
        SelectionOptions {
            gamma: self.gamma,
            n_lambda: self.n_lambda,
            lambda_ratio: self.lambda_ratio,
            glasso: self.glasso,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Estimation {
    pub correlation: CorrelationMatrix,
    pub trace: SelectionTrace,
    /// Selected network (refitted when requested).
    pub network: PcorNetwork,
    pub warnings: Vec<String>,
}

/// Runs the full estimation on `data`. The sample size used for EBIC is the
/// number of rows.
pub fn estimate(data: &DataMatrix, config: &EstimatorConfig) -> Result<Estimation> {
    let correlation = correlate(data, config.cor_method)?;
    estimate_from_correlation(correlation, data.n_rows(), config)
}

/// Selection (and optional refit) on a precomputed correlation matrix.
pub fn estimate_from_correlation(
    correlation: CorrelationMatrix,
    n: usize,
    config: &EstimatorConfig,
) -> Result<Estimation> {
    let trace = ebic_glasso_with(&correlation, n, &config.selection_options())?;
    let selected = trace.selected_network().clone();
    let network = if config.refit {
        refit_unregularized(&correlation, &selected.edge_mask(), selected.labels(), 1e-10)?
    } else {
        selected
    };
    let mut warnings = correlation.warnings.clone();
    warnings.extend(trace.warnings.iter().cloned());
    Ok(Estimation { correlation, trace, network, warnings })
}
