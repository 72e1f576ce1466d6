use ndarray::{Array1, Array2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Final-layer attention, head-averaged and marginalized onto the spatial
/// token grid and the temporal axis. Each map sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    /// `[grid_h, grid_w]`
    pub spatial: Array2<f64>,
    /// `[grid_t]`
    pub temporal: Array1<f64>,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    spatial: Vec<Vec<f64>>,
    temporal: Vec<f64>,
}

impl Serialize for AttentionRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            spatial: self.spatial.rows().into_iter().map(|r| r.to_vec()).collect(),
            temporal: self.temporal.to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AttentionRecord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        let h = w.spatial.len();
        let cols = w.spatial.first().map_or(0, Vec::len);
        if w.spatial.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged spatial attention map"));
        }
        let flat: Vec<f64> = w.spatial.into_iter().flatten().collect();
        let spatial = Array2::from_shape_vec((h, cols), flat).map_err(serde::de::Error::custom)?;
        Ok(AttentionRecord {
            spatial,
            temporal: Array1::from(w.temporal),
        })
    }
}

impl AttentionRecord {
    /// Builds a record from unnormalized non-negative maps.
    pub fn normalized(spatial: Array2<f64>, temporal: Array1<f64>) -> Result<Self> {
        let (ss, ts) = (spatial.sum(), temporal.sum());
        if !(ss > 0.0) || !(ts > 0.0) {
            return Err(Error::Domain("attention maps must carry positive mass".into()));
        }
        let r = Self {
            spatial: spatial / ss,
            temporal: temporal / ts,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, sum, ok) in [
            (
                "spatial",
                self.spatial.sum(),
                self.spatial.iter().all(|v| *v >= 0.0 && v.is_finite()),
            ),
            (
                "temporal",
                self.temporal.sum(),
                self.temporal.iter().all(|v| *v >= 0.0 && v.is_finite()),
            ),
        ] {
            if !ok || (sum - 1.0).abs() > 1e-5 {
                return Err(Error::Domain(format!(
                    "{name} attention must be non-negative and sum to 1 (sum {sum})"
                )));
            }
        }
        Ok(())
    }
}
