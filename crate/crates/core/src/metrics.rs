use crate::error::{check_len, Error, Result};

/// Mean squared difference between predictions and the noise-free truth.
pub fn eval_mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_len("predictions", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::Input("empty test set".into()));
    }
    let s: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / truth.len() as f64)
}

/// `1 − Σ(ŷ − y)² / Σ(ȳ_train − y)²`.
pub fn eval_r2_oos(pred: &[f64], y: &[f64], train_mean: f64) -> Result<f64> {
    check_len("predictions", y.len(), pred.len())?;
    let num: f64 = pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = y.iter().map(|b| (train_mean - b) * (train_mean - b)).sum();
    if !(den > 0.0) {
        return Err(Error::Numeric("test responses all equal the training mean".into()));
    }
    Ok(1.0 - num / den)
}
