//! Subjective-score evaluation: logistic mapping, correlations and F-tests.

mod ftest;
mod logistic;
mod manifest;
mod stats;

use serde::Serialize;

use crate::error::{Error, Result};

pub use ftest::{f_cdf, f_quantile, f_test, ln_gamma, regularized_incomplete_beta};
pub use logistic::{fit_logistic, LogisticFit, LogisticParams, MAX_ITERATIONS, MIN_SAMPLES};
pub use manifest::{load_manifest, parse_manifest, DatasetManifest, ManifestRow};
pub use stats::{average_ranks, plcc, rmse, srocc};

/// Outcome of evaluating one metric against DMOS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub plcc: f64,
    pub srocc: f64,
    pub rmse: f64,
    pub params: LogisticParams,
    pub converged: bool,
    pub sse: f64,
    /// Logistic predictions, one per row.
    pub fitted: Vec<f64>,
    /// `dmos - fitted`, one per row.
    pub residuals: Vec<f64>,
}

/// Fits the logistic to `(scores, dmos)` and computes PLCC and RMSE on the
/// fitted values and SROCC on the raw scores.
pub fn evaluate(scores: &[f64], dmos: &[f64]) -> Result<EvalReport> {
    let fit = fit_logistic(scores, dmos)?;
    let fitted: Vec<f64> = scores.iter().map(|&s| fit.params.predict(s)).collect();
    let residuals: Vec<f64> = dmos.iter().zip(&fitted).map(|(d, f)| d - f).collect();
    if fitted.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("logistic fit produced non-finite predictions".into()));
    }
    Ok(EvalReport {
        plcc: plcc(&fitted, dmos)?,
        srocc: srocc(scores, dmos)?,
        rmse: rmse(&fitted, dmos)?,
        params: fit.params,
        converged: fit.converged,
        sse: fit.sse,
        fitted,
        residuals,
    })
}
