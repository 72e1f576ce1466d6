use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_CLASSES: usize = 10;

/// One viscosity class of glycerin-water mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSpec {
    pub class_id: u8,
    /// Glycerin weight fraction.
    pub glycerin_fraction: f64,
    /// kg/m^3
    pub density: f64,
    /// m^2/s
    pub kinematic_viscosity: f64,
    /// N/m
    pub surface_tension: f64,
}

impl FluidSpec {
    pub fn validate(&self) -> Result<()> {
        if usize::from(self.class_id) >= NUM_CLASSES {
            return Err(Error::Domain(format!("class_id {} out of range", self.class_id)));
        }
        if !(0.0..=1.0).contains(&self.glycerin_fraction) {
            return Err(Error::Domain(format!(
                "glycerin fraction {} outside [0, 1]",
                self.glycerin_fraction
            )));
        }
        if !(900.0..=1300.0).contains(&self.density) {
            return Err(Error::Domain(format!("density {} outside [900, 1300]", self.density)));
        }
        if !(1e-7..=1e-3).contains(&self.kinematic_viscosity) {
            return Err(Error::Domain(format!(
                "kinematic viscosity {} outside [1e-7, 1e-3]",
                self.kinematic_viscosity
            )));
        }
        if !(self.surface_tension > 0.0) {
            return Err(Error::Domain(format!(
                "surface tension {} must be positive",
                self.surface_tension
            )));
        }
        Ok(())
    }
}

// (fraction, density, nu [m^2/s], sigma)
const TABLE: [(f64, f64, f64, f64); NUM_CLASSES] = [
    (0.000, 996.890, 0.89552e-6, 0.07280),
    (0.684, 1173.76, 1.36066e-6, 0.06637),
    (0.720, 1183.44, 1.80070e-6, 0.06603),
    (0.753, 1192.29, 2.38489e-6, 0.06572),
    (0.783, 1200.40, 3.16070e-6, 0.06544),
    (0.810, 1207.86, 41.9134e-6, 0.06518),
    (0.836, 1214.75, 55.6089e-6, 0.06494),
    (0.859, 1221.12, 73.8131e-6, 0.06472),
    (0.881, 1227.03, 98.0165e-6, 0.06452),
    (0.902, 1232.51, 130.203e-6, 0.06432),
];

/// The ten measured glycerin-water mixtures, ordered by class id.
pub fn fluid_table() -> Vec<FluidSpec> {
    TABLE
        .iter()
        .enumerate()
        .map(
            |(i, &(glycerin_fraction, density, kinematic_viscosity, surface_tension))| FluidSpec {
                class_id: i as u8,
                glycerin_fraction,
                density,
                kinematic_viscosity,
                surface_tension,
            },
        )
        .collect()
}

/// Table class whose viscosity is closest to `nu` in log space.
pub fn nearest_class(nu: f64) -> u8 {
    let l = nu.log10();
    TABLE
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1 .2.log10() - l).abs();
            let db = (b.1 .2.log10() - l).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i as u8)
        .unwrap_or(0)
}

/// `n` viscosity levels log-spaced over the table range. Density, surface
/// tension and glycerin fraction are interpolated piecewise-linearly in
/// log-viscosity between neighbouring table rows; `class_id` is the nearest
/// table class.
pub fn log_spaced_levels(n: usize) -> Result<Vec<FluidSpec>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {n}")));
    }
    let lo = TABLE[0].2.log10();
    let hi = TABLE[NUM_CLASSES - 1].2.log10();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let l = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        // segment containing l
        let seg = (0..NUM_CLASSES - 1)
            .find(|&k| l <= TABLE[k + 1].2.log10())
            .unwrap_or(NUM_CLASSES - 2);
        let (a, b) = (TABLE[seg], TABLE[seg + 1]);
        let w = ((l - a.2.log10()) / (b.2.log10() - a.2.log10())).clamp(0.0, 1.0);
        let lerp = |x: f64, y: f64| x + (y - x) * w;
        let nu = if i == 0 {
            TABLE[0].2
        } else if i == n - 1 {
            TABLE[NUM_CLASSES - 1].2
        } else {
            10f64.powf(l)
        };
        out.push(FluidSpec {
            class_id: nearest_class(nu),
            glycerin_fraction: lerp(a.0, b.0),
            density: lerp(a.1, b.1),
            kinematic_viscosity: nu,
            surface_tension: lerp(a.3, b.3),
        });
    }
    Ok(out)
}
