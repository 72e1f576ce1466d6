use crate::{Error, Result};

/// Mean absolute error in `log10` viscosity.
pub fn mae_log(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape {
            axis: "targets",
            detail: format!("{} predictions vs {} targets", predictions.len(), targets.len()),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Domain("mae of an empty set".into()));
    }
    if let Some(v) = predictions.iter().chain(targets).find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("viscosity must be positive, got {v}")));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p.log10() - t.log10()).abs())
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Mean absolute difference, for errors already in normalized units.
pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape {
            axis: "targets",
            detail: format!("{} vs {} values", a.len(), b.len()),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}
