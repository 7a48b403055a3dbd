use crate::error::{Error, Result};

fn check(predictions: &[f64], targets: &[f64], name: &str) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::dim(name, predictions.len(), targets.len()));
    }
    if predictions.is_empty() {
        return Err(Error::Domain(format!("{name} of an empty set")));
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check(predictions, targets, "mse")?;
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (t - p) * (t - p))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Mean absolute error.
pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check(predictions, targets, "mae")?;
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (t - p).abs()).sum();
    Ok(sum / predictions.len() as f64)
}
