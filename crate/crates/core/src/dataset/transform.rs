use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_STD_LOGV: f64 = 1e-8;

/// z-normalization statistics of log10 viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationStats {
    #[serde(serialize_with = "super::json_f64::serialize")]
    pub mean_logv: f64,
    #[serde(serialize_with = "super::json_f64::serialize")]
    pub std_logv: f64,
}

impl NormalizationStats {
    pub fn new(mean_logv: f64, std_logv: f64) -> Result<Self> {
        let stats = Self { mean_logv, std_logv };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_logv.is_finite() || !(self.std_logv > MIN_STD_LOGV) {
            return Err(Error::Domain(format!(
                "invalid normalization stats (mean {}, std {})",
                self.mean_logv, self.std_logv
            )));
        }
        Ok(())
    }

    /// Population mean/std of log10 of the given viscosities. A degenerate
    /// spread (single level) falls back to unit std.
    pub fn from_viscosities<I: IntoIterator<Item = f64>>(nus: I) -> Result<Self> {
        let logs: Vec<f64> = nus
            .into_iter()
            .map(|nu| {
                if nu > 0.0 {
                    Ok(nu.log10())
                } else {
                    Err(Error::Domain(format!("non-positive viscosity {nu}")))
                }
            })
            .collect::<Result<_>>()?;
        if logs.is_empty() {
            return Err(Error::Domain("no viscosities to normalize".into()));
        }
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        let std = if std > MIN_STD_LOGV {
            std
        } else {
            log::warn!("degenerate log-viscosity spread; using unit std");
            1.0
        };
        Self::new(mean, std)
    }
}

/// Maps a viscosity to normalized log space: `(log10(nu) - mean) / std`.
pub fn target_transform(nu: f64, stats: &NormalizationStats) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
    }
    stats.validate()?;
    Ok((nu.log10() - stats.mean_logv) / stats.std_logv)
}

pub fn target_inverse(z: f64, stats: &NormalizationStats) -> f64 {
    10f64.powf(z * stats.std_logv + stats.mean_logv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fluid_table;
    use proptest::prelude::*;

    #[test]
    fn centering_identity() {
        let s = NormalizationStats::new(-5.0, 0.7).unwrap();
        let z = target_transform(10f64.powf(-5.0), &s).unwrap();
        assert!(z.abs() < 1e-12);
    }

    #[test]
    fn water_row_against_direct_logarithm() {
        let s = NormalizationStats::new(-5.0, 1.0).unwrap();
        let z = target_transform(0.89552e-6, &s).unwrap();
        // log10(8.9552e-7) + 5 = log10(8.9552) - 2
        let expected = 8.9552f64.ln() / std::f64::consts::LN_10 - 2.0;
        assert!((z - expected).abs() < 1e-12);
        assert!((z - (-1.0479)).abs() < 5e-5);
    }

    #[test]
    fn table_round_trip() {
        let s = NormalizationStats::new(-5.2, 0.9).unwrap();
        for f in fluid_table() {
            let nu = f.kinematic_viscosity;
            let back = target_inverse(target_transform(nu, &s).unwrap(), &s);
            assert!(((back - nu) / nu).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive() {
        let s = NormalizationStats::new(0.0, 1.0).unwrap();
        assert!(matches!(target_transform(0.0, &s), Err(Error::Domain(_))));
        assert!(matches!(target_transform(-1e-6, &s), Err(Error::Domain(_))));
        assert!(NormalizationStats::new(0.0, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn strictly_increasing_and_invertible(a in -7.0f64..-3.0, b in -7.0f64..-3.0,
                                              mean in -6.0f64..-4.0, std in 0.1f64..2.0) {
            let s = NormalizationStats::new(mean, std).unwrap();
            let (na, nb) = (10f64.powf(a), 10f64.powf(b));
            let (za, zb) = (target_transform(na, &s).unwrap(), target_transform(nb, &s).unwrap());
            if a < b { prop_assert!(za < zb); }
            let back = target_inverse(za, &s);
            prop_assert!(((back - na) / na).abs() <= 1e-12);
        }
    }
}
