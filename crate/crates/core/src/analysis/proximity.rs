use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Proximities below this are treated as zero and left out of the fit.
pub const MIN_PROXIMITY: f64 = 1e-12;

/// Mean absolute gap of each class to its neighbours.
///
/// End classes use their single neighbour; interior classes use
/// `|2 v_n - v_{n-1} - v_{n+1}| / 2`. Input must be sorted ascending.
pub fn proximity(viscosities: &[f64]) -> Result<Vec<f64>> {
    let n = viscosities.len();
    if n < 2 {
        return Err(Error::Domain(format!("proximity needs at least 2 values, got {n}")));
    }
    if viscosities.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("proximity input must be sorted ascending".into()));
    }
    let v = viscosities;
    Ok((0..n)
        .map(|i| match i {
            0 => (v[0] - v[1]).abs(),
            i if i == n - 1 => (v[n - 1] - v[n - 2]).abs(),
            i => (2.0 * v[i] - v[i - 1] - v[i + 1]).abs() / 2.0,
        })
        .collect())
}

/// `acc ~ slope * ln(D) + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Indices of the points entering the fit.
    pub used: Vec<usize>,
}

/// Ordinary least squares of accuracy on `ln D`.
pub fn accuracy_vs_proximity(d: &[f64], per_class_accuracy: &[f64]) -> Result<LogFit> {
    if d.len() != per_class_accuracy.len() {
        return Err(Error::Shape {
            axis: "accuracy",
            detail: format!("{} proximities vs {} accuracies", d.len(), per_class_accuracy.len()),
        });
    }
    if let Some(bad) = d.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("proximity must be positive, got {bad}")));
    }
    let used: Vec<usize> = (0..d.len())
        .filter(|&i| {
            let keep = d[i] >= MIN_PROXIMITY;
            if !keep {
                log::warn!("class {i}: proximity {} below {MIN_PROXIMITY}, excluded from fit", d[i]);
            }
            keep
        })
        .collect();
    if used.len() < 2 {
        return Err(Error::Domain("need at least 2 usable points to fit".into()));
    }
    let x: Vec<f64> = used.iter().map(|&i| d[i].ln()).collect();
    let y: Vec<f64> = used.iter().map(|&i| per_class_accuracy[i]).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all proximities equal; slope undefined".into()));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Ok(LogFit {
            slope: 0.0,
            intercept: y[0],
            r2: 0.0,
            used,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    Ok(LogFit {
        slope,
        intercept,
        r2,
        used,
    })
}
