use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::model::MixtureParams;
use crate::{Error, Result};

/// A predicted mixture with a global scale on every component std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    pub params: MixtureParams,
    pub scale: f64,
}

impl PredictiveDistribution {
    pub fn new(params: MixtureParams) -> Self {
        Self { params, scale: 1.0 }
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale must be positive, got {scale}")));
        }
        Ok(Self {
            params: self.params.clone(),
            scale,
        })
    }

    fn sigma(&self, k: usize) -> f64 {
        self.scale * self.params.stds[k]
    }

    /// Mean is unaffected by the scale.
    pub fn mean(&self) -> f64 {
        self.params.mean()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        (0..self.params.k())
            .map(|k| {
                let s = self.sigma(k);
                let z = (y - self.params.means[k]) / s;
                self.params.weights[k] * (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt())
            })
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        (0..self.params.k())
            .map(|k| self.params.weights[k] * std_normal_cdf((y - self.params.means[k]) / self.sigma(k)))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    fn bracket(&self) -> (f64, f64) {
        let max_s = (0..self.params.k()).map(|k| self.sigma(k)).fold(0.0, f64::max);
        let lo = self.params.means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.params.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - 12.0 * max_s, hi + 12.0 * max_s)
    }

    /// Bisection on the CDF until `|F(y) - tau| <= 1e-12`.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain(format!("quantile level {tau} outside (0, 1)")));
        }
        let (mut lo, mut hi) = self.bracket();
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let f = self.cdf(mid);
            if (f - tau).abs() <= 1e-12 {
                break;
            }
            if f < tau {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        Ok(mid)
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

pub fn mixture_cdf(dist: &PredictiveDistribution, y: f64) -> f64 {
    dist.cdf(y)
}

pub fn mixture_quantile(dist: &PredictiveDistribution, tau: f64) -> Result<f64> {
    dist.quantile(tau)
}
