use ndarray::{s, Array4};
use serde::{Deserialize, Serialize};

use super::{
    inject_noise, refract_render, vortex_surface, BackgroundPattern, LightingPreset, RenderConfig, Schedule,
    SurfaceParams,
};
use crate::dataset::{FluidSpec, MixingCondition, Source, VideoConfig, VideoSample};
use crate::{seed, Result};

/// Everything needed to render a clip besides the sample itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub video: VideoConfig,
    pub render: RenderConfig,
    pub surface: SurfaceParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            video: VideoConfig::DESK,
            render: RenderConfig::default(),
            surface: SurfaceParams::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.video.validate()?;
        self.render.validate()?;
        self.surface.validate()
    }
}

fn sample_seed(base: u64, fluid: &FluidSpec, condition: &MixingCondition) -> u64 {
    let pattern = condition.pattern_id.to_string();
    let pattern_hash = pattern.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    });
    seed::derive(
        base,
        &[
            fluid.kinematic_viscosity.to_bits(),
            condition.omega_rpm.to_bits(),
            u64::from(condition.lighting_id),
            pattern_hash,
        ],
    )
}

/// Renders one clip frame by frame at `t_k = k / fps`.
///
/// The ripple field is fixed per clip; sensor noise is drawn per frame.
/// Output is a pure function of the inputs and `config.render.seed`.
pub fn synth_video(
    fluid: &FluidSpec,
    condition: &MixingCondition,
    pattern: &BackgroundPattern,
    config: &SynthConfig,
) -> Result<VideoSample> {
    config.validate()?;
    fluid.validate()?;
    condition.validate(config.video.duration())?;
    let lighting = LightingPreset::preset(condition.lighting_id)?;
    let render = RenderConfig {
        lighting,
        ..config.render
    };
    let schedule = Schedule {
        steady_duration: condition.steady_duration,
        decay_duration: condition.decay_duration,
    };
    let base = sample_seed(config.render.seed, fluid, condition);
    let (t_len, h, w) = (
        usize::from(config.video.frames),
        usize::from(config.video.height),
        usize::from(config.video.width),
    );
    let fps = f64::from(config.video.fps);

    let mut frames = Array4::zeros((t_len, h, w, 3));
    for k in 0..t_len {
        let t = k as f64 / fps;
        let surface = vortex_surface(
            fluid,
            condition.omega_rpm,
            t,
            schedule,
            &render,
            &config.surface,
            (h, w),
            seed::derive(base, &[1]),
        )?;
        let clean = refract_render(&surface, pattern, &render)?;
        let noisy = inject_noise(&clean, render.noise_level, seed::derive(base, &[2, k as u64]))?;
        frames.slice_mut(s![k, .., .., ..]).assign(&noisy);
    }

    Ok(VideoSample {
        sample_id: format!("syn-{base:016x}"),
        frames,
        condition: *condition,
        fluid: *fluid,
        source: Source::Synthetic,
    })
}
