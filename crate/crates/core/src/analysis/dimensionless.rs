use serde::{Deserialize, Serialize};

use crate::dataset::FluidSpec;
use crate::{Error, Result};

/// Characteristic scales of the stirred tank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// Characteristic radius R (m); the impeller radius by default.
    pub radius: f64,
    /// Characteristic length L (m); the impeller diameter by default.
    pub length: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self::from_impeller(0.02)
    }
}

impl GeometrySpec {
    pub fn from_impeller(radius: f64) -> Self {
        Self {
            radius,
            length: 2.0 * radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.length > 0.0) {
            return Err(Error::Domain(format!("geometry lengths must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessTriple {
    pub re: f64,
    pub ca: f64,
    pub we: f64,
}

pub fn rpm_to_rad_per_s(rpm: f64) -> f64 {
    rpm * 2.0 * std::f64::consts::PI / 60.0
}

/// Reynolds, capillary and Weber numbers with tip speed `U = omega R`:
/// `Re = U L / nu`, `Ca = rho nu U / sigma`, `We = rho U^2 L / sigma`.
pub fn dimensionless_numbers(fluid: &FluidSpec, omega_rpm: f64, geom: &GeometrySpec) -> Result<DimensionlessTriple> {
    if !(omega_rpm >= 0.0) {
        return Err(Error::Domain(format!("omega must be non-negative, got {omega_rpm}")));
    }
    geom.validate()?;
    let u = rpm_to_rad_per_s(omega_rpm) * geom.radius;
    let nu = fluid.kinematic_viscosity;
    Ok(DimensionlessTriple {
        re: u * geom.length / nu,
        ca: fluid.density * nu * u / fluid.surface_tension,
        we: fluid.density * u * u * geom.length / fluid.surface_tension,
    })
}
