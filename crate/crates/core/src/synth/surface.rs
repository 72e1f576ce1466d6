use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RenderConfig;
use crate::analysis::{dimensionless_numbers, rpm_to_rad_per_s, GeometrySpec};
use crate::dataset::FluidSpec;
use crate::{seed, Error, Result};

/// Constants of the analytic surface model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceParams {
    /// Viscous decay rate coefficient: `lambda = c_decay * nu / R_c^2`.
    pub c_decay: f64,
    /// Ripple damping: amplitude scales as `1 / (1 + c_ripple / Re)`.
    pub c_ripple: f64,
    /// Ripple wavenumber band in cycles per container radius.
    pub ripple_band: [f64; 2],
    pub ripple_modes: usize,
    /// Ripple amplitude scale (m).
    pub ripple_amplitude: f64,
    /// Angular rate of the ripple field relative to the impeller.
    pub ripple_rotation_ratio: f64,
    /// m/s^2
    pub gravity: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self {
            c_decay: 4.0,
            c_ripple: 50.0,
            ripple_band: [4.0, 16.0],
            ripple_modes: 24,
            ripple_amplitude: 3e-4,
            ripple_rotation_ratio: 0.05,
            gravity: 9.81,
        }
    }
}

impl SurfaceParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c_decay >= 0.0
            && self.c_ripple >= 0.0
            && self.ripple_band[0] > 0.0
            && self.ripple_band[1] >= self.ripple_band[0]
            && self.ripple_amplitude >= 0.0
            && self.ripple_rotation_ratio.is_finite()
            && self.gravity > 0.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid surface parameters {self:?}")));
        }
        Ok(())
    }
}

/// Rotation then sudden stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub steady_duration: f64,
    pub decay_duration: f64,
}

impl Schedule {
    pub fn total(&self) -> f64 {
        self.steady_duration + self.decay_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Steady,
    Decay,
}

/// Free-surface height above the container floor, sampled at pixel centres.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    /// m, `[H, W]`
    pub height: Array2<f64>,
    pub time: f64,
    pub phase: Phase,
    pub meters_per_pixel: f64,
}

/// Combined (Rankine) vortex surface relative to the level at the wall.
///
/// Forced core `omega^2 r^2 / 2g` for `r <= r_c`, free vortex
/// `omega^2 r_c^2 / g - omega^2 r_c^4 / (2 g r^2)` outside, offset so the
/// height is zero at `r_wall`. Zero beyond the wall.
pub fn vortex_profile(r: f64, omega_rad: f64, r_c: f64, r_wall: f64, gravity: f64) -> f64 {
    let a = omega_rad * omega_rad / gravity;
    let free = |r: f64| a * r_c * r_c - a * r_c.powi(4) / (2.0 * r * r);
    if r >= r_wall {
        return 0.0;
    }
    let level = if r <= r_c { a * r * r / 2.0 } else { free(r) };
    level - free(r_wall)
}

/// Fraction of the vortex remaining `since_stop` seconds after the impeller
/// stops: `exp(-c_decay * nu / r_c^2 * since_stop)`.
pub fn decay_factor(nu: f64, since_stop: f64, c_decay: f64, r_c: f64) -> f64 {
    if since_stop <= 0.0 {
        return 1.0;
    }
    (-c_decay * nu / (r_c * r_c) * since_stop).exp()
}

/// `1 / (1 + c_ripple / Re)`, zero for a fluid at rest.
pub fn ripple_amplitude_factor(re: f64, c_ripple: f64) -> f64 {
    if re <= 0.0 {
        0.0
    } else {
        re / (re + c_ripple)
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

struct RippleMode {
    k: f64,
    dir: (f64, f64),
    phase: f64,
    weight: f64,
}

fn ripple_modes(params: &SurfaceParams, r_wall: f64, seed: u64) -> Vec<RippleMode> {
    let mut rng = seed::rng(seed, &[0x21bb1e]);
    let m = params.ripple_modes.max(1);
    (0..params.ripple_modes)
        .map(|_| {
            let cycles = rng.random_range(params.ripple_band[0]..=params.ripple_band[1]);
            let theta = rng.random_range(0.0..2.0 * PI);
            RippleMode {
                k: 2.0 * PI * cycles / r_wall,
                dir: (theta.cos(), theta.sin()),
                phase: rng.random_range(0.0..2.0 * PI),
                weight: 1.0 / (m as f64).sqrt(),
            }
        })
        .collect()
}

/// Free-surface height field at time `t` of a stirring schedule.
///
/// During the decay phase both the vortex/ripple amplitude and the rotation
/// rate fall off as `exp(-lambda (t - t_stop))`. Heights are clamped at the
/// floor.
#[allow(clippy::too_many_arguments)]
pub fn vortex_surface(
    fluid: &FluidSpec,
    omega_rpm: f64,
    t: f64,
    schedule: Schedule,
    geometry: &RenderConfig,
    params: &SurfaceParams,
    grid: (usize, usize),
    seed: u64,
) -> Result<SurfaceState> {
    geometry.validate()?;
    params.validate()?;
    if !(omega_rpm >= 0.0) {
        return Err(Error::Domain(format!("omega must be non-negative, got {omega_rpm}")));
    }
    let total = schedule.total();
    if !(t >= 0.0) || t > total + 1e-9 {
        return Err(Error::Domain(format!("time {t} s outside clip of {total} s")));
    }
    let (h, w) = grid;
    if h == 0 || w == 0 {
        return Err(Error::Domain("empty surface grid".into()));
    }

    let r_c = geometry.impeller_radius;
    let r_wall = geometry.container_radius;
    let omega = rpm_to_rad_per_s(omega_rpm);
    let nu = fluid.kinematic_viscosity;
    let since_stop = t - schedule.steady_duration;
    let (phase, damp) = if since_stop > 0.0 {
        (Phase::Decay, decay_factor(nu, since_stop, params.c_decay, r_c))
    } else {
        (Phase::Steady, 1.0)
    };

    // rotation angle of the ripple field, integrating the decaying rate
    let lambda = params.c_decay * nu / (r_c * r_c);
    let spin = params.ripple_rotation_ratio * omega;
    let angle = if since_stop <= 0.0 {
        spin * t
    } else if lambda > 0.0 {
        spin * (schedule.steady_duration + (1.0 - (-lambda * since_stop).exp()) / lambda)
    } else {
        spin * t
    };
    let (ca, sa) = (angle.cos(), angle.sin());

    let re = dimensionless_numbers(fluid, omega_rpm, &GeometrySpec::from_impeller(r_c))?.re;
    let ripple_amp = params.ripple_amplitude * ripple_amplitude_factor(re, params.c_ripple);
    let modes = if ripple_amp > 0.0 {
        ripple_modes(params, r_wall, seed)
    } else {
        Vec::new()
    };

    let mpp = 2.0 * r_wall / h.max(w) as f64;
    let rest = geometry.fluid_rest_depth;
    let height = Array2::from_shape_fn((h, w), |(i, j)| {
        let x = (j as f64 + 0.5 - w as f64 / 2.0) * mpp;
        let y = (i as f64 + 0.5 - h as f64 / 2.0) * mpp;
        let r = x.hypot(y);
        if r >= r_wall {
            return rest;
        }
        let mut dev = vortex_profile(r, omega, r_c, r_wall, params.gravity);
        if !modes.is_empty() {
            let env = smoothstep((r - r_c) / (0.5 * r_c)) * (1.0 - smoothstep((r - 0.85 * r_wall) / (0.15 * r_wall)));
            if env > 0.0 {
                // sample the co-rotating field
                let (xr, yr) = (ca * x + sa * y, -sa * x + ca * y);
                let ripple: f64 = modes
                    .iter()
                    .map(|m| m.weight * (m.k * (m.dir.0 * xr + m.dir.1 * yr) + m.phase).cos())
                    .sum();
                dev += ripple_amp * env * ripple;
            }
        }
        (rest + damp * dev).max(0.0)
    });

    Ok(SurfaceState {
        height,
        time: t,
        phase,
        meters_per_pixel: mpp,
    })
}
