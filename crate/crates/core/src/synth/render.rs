use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::{BackgroundPattern, SurfaceState};
use crate::{Error, Result};

/// Light direction and highlight shape for one of the recording setups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightingPreset {
    /// Multiplies the refracted pattern intensity.
    pub gain: f64,
    /// Degrees above the horizon.
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    /// Peak highlight in units of 255 per unit Fresnel reflectance.
    pub specular_strength: f64,
    /// Half-angle of the highlight cone around the mirror direction, degrees.
    pub specular_cone_deg: f64,
}

impl LightingPreset {
    pub const NEUTRAL: LightingPreset = LightingPreset {
        gain: 1.0,
        elevation_deg: 50.0,
        azimuth_deg: 0.0,
        specular_strength: 10.0,
        specular_cone_deg: 8.0,
    };

    pub const COUNT: u8 = 5;

    /// Preset `id` in `0..5`; preset 0 is neutral.
    pub fn preset(id: u8) -> Result<Self> {
        let p = match id {
            0 => Self::NEUTRAL,
            1 => LightingPreset {
                gain: 0.8,
                elevation_deg: 45.0,
                azimuth_deg: 90.0,
                specular_strength: 12.0,
                specular_cone_deg: 10.0,
            },
            2 => LightingPreset {
                gain: 1.15,
                elevation_deg: 60.0,
                azimuth_deg: 200.0,
                specular_strength: 8.0,
                specular_cone_deg: 6.0,
            },
            3 => LightingPreset {
                gain: 0.9,
                elevation_deg: 35.0,
                azimuth_deg: 300.0,
                specular_strength: 15.0,
                specular_cone_deg: 12.0,
            },
            4 => LightingPreset {
                gain: 1.05,
                elevation_deg: 70.0,
                azimuth_deg: 135.0,
                specular_strength: 6.0,
                specular_cone_deg: 5.0,
            },
            _ => return Err(Error::Domain(format!("lighting id {id} outside 0..{}", Self::COUNT))),
        };
        Ok(p)
    }

    /// Unit vector towards the light.
    fn direction(&self) -> [f64; 3] {
        let (e, a) = (self.elevation_deg.to_radians(), self.azimuth_deg.to_radians());
        [e.cos() * a.cos(), e.cos() * a.sin(), e.sin()]
    }

    fn validate(&self) -> Result<()> {
        let ok = self.gain >= 0.0
            && (0.0..=90.0).contains(&self.elevation_deg)
            && self.azimuth_deg.is_finite()
            && self.specular_strength >= 0.0
            && self.specular_cone_deg > 0.0
            && self.specular_cone_deg < 90.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid lighting preset {self:?}")));
        }
        Ok(())
    }
}

impl Default for LightingPreset {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

/// Optical and geometric setup of the synthetic rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub refractive_index: f64,
    /// m above the floor; the camera looks straight down.
    pub camera_height: f64,
    /// m
    pub fluid_rest_depth: f64,
    /// m; the image spans the container diameter.
    pub container_radius: f64,
    /// m; radius of the forced-vortex core.
    pub impeller_radius: f64,
    /// Gaussian intensity std added per pixel.
    pub noise_level: f64,
    /// Global gain, applied on top of the lighting preset's gain.
    pub lighting_gain: f64,
    pub lighting: LightingPreset,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            refractive_index: 1.333,
            camera_height: 0.5,
            fluid_rest_depth: 0.10,
            container_radius: 0.075,
            impeller_radius: 0.02,
            noise_level: 2.0,
            lighting_gain: 1.0,
            lighting: LightingPreset::NEUTRAL,
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1.0..=2.0).contains(&self.refractive_index) {
            return Err(Error::InvalidConfig(format!(
                "refractive index {} outside [1, 2]",
                self.refractive_index
            )));
        }
        let lengths = [
            ("camera_height", self.camera_height),
            ("fluid_rest_depth", self.fluid_rest_depth),
            ("container_radius", self.container_radius),
            ("impeller_radius", self.impeller_radius),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.impeller_radius >= self.container_radius {
            return Err(Error::InvalidConfig("impeller must fit inside the container".into()));
        }
        if self.camera_height <= self.fluid_rest_depth {
            return Err(Error::InvalidConfig("camera must sit above the fluid".into()));
        }
        if !(self.noise_level >= 0.0) || !(self.lighting_gain >= 0.0) {
            return Err(Error::InvalidConfig("noise level and gain must be non-negative".into()));
        }
        self.lighting.validate()
    }
}

/// Floor-plane displacement (m) of a vertical ray refracted at a surface
/// point of the given height and slope `(dh/dx, dh/dy)`.
pub fn refracted_offset(slope: (f64, f64), height: f64, refractive_index: f64) -> (f64, f64) {
    if refractive_index == 1.0 || height <= 0.0 {
        return (0.0, 0.0);
    }
    let norm = (slope.0 * slope.0 + slope.1 * slope.1 + 1.0).sqrt();
    let n = [-slope.0 / norm, -slope.1 / norm, 1.0 / norm];
    let eta = 1.0 / refractive_index;
    // incident d = (0, 0, -1), cos_i = -n.d
    let cos_i = n[2];
    let cos_t = (1.0 - eta * eta * (1.0 - cos_i * cos_i)).sqrt();
    let k = eta * cos_i - cos_t;
    let t = [k * n[0], k * n[1], -eta + k * n[2]];
    let s = height / -t[2];
    (s * t[0], s * t[1])
}

fn gradient(h: &Array2<f64>, mpp: f64) -> (Array2<f64>, Array2<f64>) {
    let (rows, cols) = h.dim();
    let d = |a: f64, b: f64, steps: usize| {
        if steps == 0 {
            0.0
        } else {
            (b - a) / (steps as f64 * mpp)
        }
    };
    let gx = Array2::from_shape_fn((rows, cols), |(i, j)| {
        let (l, r) = (j.saturating_sub(1), (j + 1).min(cols - 1));
        d(h[[i, l]], h[[i, r]], r - l)
    });
    let gy = Array2::from_shape_fn((rows, cols), |(i, j)| {
        let (u, b) = (i.saturating_sub(1), (i + 1).min(rows - 1));
        d(h[[u, j]], h[[b, j]], b - u)
    });
    (gx, gy)
}

/// Per-pixel pattern displacement in pixels, `[H, W, 2]` as `(dx, dy)`.
pub fn landing_offsets(surface: &SurfaceState, refractive_index: f64) -> Array3<f64> {
    let (rows, cols) = surface.height.dim();
    let mut out = Array3::zeros((rows, cols, 2));
    if rows == 0 || cols == 0 {
        return out;
    }
    let mpp = surface.meters_per_pixel;
    let (gx, gy) = gradient(&surface.height, mpp);
    for i in 0..rows {
        for j in 0..cols {
            let (dx, dy) = refracted_offset((gx[[i, j]], gy[[i, j]]), surface.height[[i, j]], refractive_index);
            out[[i, j, 0]] = dx / mpp;
            out[[i, j, 1]] = dy / mpp;
        }
    }
    out
}

fn bilinear(p: &Array3<u8>, y: f64, x: f64, c: usize) -> f64 {
    let (h, w, _) = p.dim();
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let v = |yy: usize, xx: usize| f64::from(p[[yy, xx, c]]);
    let top = v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx;
    let bot = v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx;
    top * (1.0 - fy) + bot * fy
}

/// Unpolarized Fresnel reflectance from air into a medium of index `n`.
fn fresnel(cos_i: f64, n: f64) -> f64 {
    let sin_t = (1.0 - cos_i * cos_i).max(0.0).sqrt() / n;
    let cos_t = (1.0 - sin_t * sin_t).max(0.0).sqrt();
    let rs = ((cos_i - n * cos_t) / (cos_i + n * cos_t)).powi(2);
    let rp = ((cos_t - n * cos_i) / (cos_t + n * cos_i)).powi(2);
    0.5 * (rs + rp)
}

/// Renders one frame: the pattern seen through the refracting surface.
///
/// The pattern is centred under the image; lookups falling outside it use
/// the clamped border.
pub fn refract_render(
    surface: &SurfaceState,
    pattern: &BackgroundPattern,
    config: &RenderConfig,
) -> Result<Array3<u8>> {
    config.validate()?;
    let (rows, cols) = surface.height.dim();
    if pattern.height() < rows || pattern.width() < cols {
        return Err(Error::Shape {
            axis: "pattern",
            detail: format!(
                "pattern {}x{} smaller than image {rows}x{cols}",
                pattern.height(),
                pattern.width()
            ),
        });
    }
    if surface.height.iter().any(|h| !h.is_finite()) {
        return Err(Error::Domain("non-finite surface height".into()));
    }
    let n = config.refractive_index;
    let offsets = landing_offsets(surface, n);
    let (gx, gy) = gradient(&surface.height, surface.meters_per_pixel);
    let oy = ((pattern.height() - rows) / 2) as f64;
    let ox = ((pattern.width() - cols) / 2) as f64;
    let gain = config.lighting_gain * config.lighting.gain;

    let light = config.lighting.direction();
    let half = {
        let v = [light[0], light[1], light[2] + 1.0];
        let m = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / m, v[1] / m, v[2] / m]
    };
    let cos_cone = config.lighting.specular_cone_deg.to_radians().cos();
    let strength = config.lighting.specular_strength;

    let mut out = Array3::zeros((rows, cols, 3));
    for i in 0..rows {
        for j in 0..cols {
            let y = i as f64 + oy + offsets[[i, j, 1]];
            let x = j as f64 + ox + offsets[[i, j, 0]];
            let spec = if strength > 0.0 && n > 1.0 {
                let (sx, sy) = (gx[[i, j]], gy[[i, j]]);
                let norm = (sx * sx + sy * sy + 1.0).sqrt();
                let normal = [-sx / norm, -sy / norm, 1.0 / norm];
                let cos_ang = normal[0] * half[0] + normal[1] * half[1] + normal[2] * half[2];
                if cos_ang > cos_cone {
                    let shape = ((cos_ang - cos_cone) / (1.0 - cos_cone)).powi(2);
                    255.0 * strength * fresnel(normal[2], n) * shape
                } else {
                    0.0
                }
            } else {
                0.0
            };
            for c in 0..3 {
                let v = bilinear(&pattern.pixels, y, x, c) * gain + spec;
                out[[i, j, c]] = v.clamp(0.0, 255.0).round() as u8;
            }
        }
    }
    Ok(out)
}
