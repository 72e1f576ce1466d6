use serde::{Deserialize, Serialize};

use crate::dataset::{target_inverse, NormalizationStats};
use crate::{Error, Result};

/// A K-component Gaussian mixture over normalized log-viscosity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        let p = Self { weights, means, stds };
        p.validate()?;
        Ok(p)
    }

    /// Single Gaussian.
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![std])
    }

    /// Maps raw head outputs to a mixture: softmax weights, identity means,
    /// `softplus(raw) + sigma_floor` stds.
    pub fn from_raw(logits: &[f64], means: &[f64], raw_stds: &[f64], sigma_floor: f64) -> Result<Self> {
        Self::new(
            softmax(logits),
            means.to_vec(),
            raw_stds.iter().map(|&r| softplus(r) + sigma_floor).collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.stds.len() != k {
            return Err(Error::Shape {
                axis: "mixture",
                detail: format!(
                    "weights/means/stds lengths {}/{}/{}",
                    k,
                    self.means.len(),
                    self.stds.len()
                ),
            });
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain(format!(
                "negative or NaN mixture weight in {:?}",
                self.weights
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!("mixture weights sum to {sum}")));
        }
        if self.means.iter().any(|m| !m.is_finite()) || self.stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Domain("mixture means must be finite and stds positive".into()));
        }
        Ok(())
    }

    /// `sum_k pi_k mu_k`.
    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    /// Total variance: within-component plus between-component spread.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(w, (m, s))| w * (s * s + (m - mu).powi(2)))
            .sum()
    }
}

/// Mixture mean mapped back to physical viscosity (m^2/s).
pub fn predict_viscosity(params: &MixtureParams, stats: &NormalizationStats) -> f64 {
    target_inverse(params.mean(), stats)
}
