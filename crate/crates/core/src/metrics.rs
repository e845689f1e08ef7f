//! Prediction scores: normalized RMSE and independent standard errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least 2 points")]
    TooFew,
    #[error("truth has zero range")]
    ZeroRange,
    #[error("every variance is zero")]
    AllZeroVariance,
    #[error("non-finite input at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Lat,
    Gradmag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub quantity: Quantity,
    pub n: usize,
    pub nrmse_percent: f64,
    pub coverage_percent: f64,
    /// Points left out of the ISE because their variance is zero.
    pub zero_variance: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ise: Option<Vec<f64>>,
}

fn check(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Length(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(MetricsError::TooFew);
    }
    if let Some(i) = (0..a.len()).find(|&i| !a[i].is_finite() || !b[i].is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    Ok(())
}

/// 100 / range(truth) · RMS(pred − truth).
pub fn nrmse(pred: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    let (lo, hi) = truth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(MetricsError::ZeroRange);
    }
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64;
    Ok(100.0 * mse.sqrt() / range)
}

/// Per-point (pred − truth)/sd; zero-variance points give NaN and are
/// excluded from the coverage. Returns (ise, coverage %, excluded count).
pub fn ise(pred: &[f64], var: &[f64], truth: &[f64]) -> Result<(Vec<f64>, f64, usize), MetricsError> {
    check(pred, truth)?;
    check(var, truth)?;
    let mut used = 0usize;
    let mut inside = 0usize;
    let z: Vec<f64> = (0..pred.len())
        .map(|i| {
            if var[i] > 0.0 {
                let z = (pred[i] - truth[i]) / var[i].sqrt();
                used += 1;
                if z.abs() <= 2.0 {
                    inside += 1;
                }
                z
            } else {
                f64::NAN
            }
        })
        .collect();
    if used == 0 {
        return Err(MetricsError::AllZeroVariance);
    }
    Ok((z, 100.0 * inside as f64 / used as f64, pred.len() - used))
}

pub fn report(quantity: Quantity, pred: &[f64], var: &[f64], truth: &[f64], keep_ise: bool) -> Result<MetricsReport, MetricsError> {
    let nrmse_percent = nrmse(pred, truth)?;
    let (z, coverage_percent, zero_variance) = ise(pred, var, truth)?;
    Ok(MetricsReport { quantity, n: pred.len(), nrmse_percent, coverage_percent, zero_variance, ise: keep_ise.then_some(z) })
}

/// LAT channel: posterior mean and variance.
pub fn lat_report(mean: &[f64], var: &[f64], truth: &[f64]) -> Result<MetricsReport, MetricsError> {
    report(Quantity::Lat, mean, var, truth, false)
}

/// |∇LAT| channel: magnitude of the posterior mean gradient as the
/// prediction and the SD of sampled magnitudes as its uncertainty.
pub fn gradmag_report(magnitude_of_mean: &[f64], sampled_sd: &[f64], truth: &[f64]) -> Result<MetricsReport, MetricsError> {
    let var: Vec<f64> = sampled_sd.iter().map(|s| s * s).collect();
    report(Quantity::Gradmag, magnitude_of_mean, &var, truth, false)
}
