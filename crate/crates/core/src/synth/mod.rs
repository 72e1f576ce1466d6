//! Procedural labelled videos: background patterns refracted through an
//! analytic, viscosity-dependent vortex free surface.

mod generate;
mod noise;
mod pattern;
mod render;
mod surface;
mod video;

pub use generate::{generate_dataset, GenConfig, PatternParams, SampleSpec, ViscositySet};
pub use noise::inject_noise;
pub use pattern::{
    compose_multipattern, make_checkerboard, make_noise_pattern, make_procedural_pattern, pattern_for_id,
    BackgroundPattern, PatternKind,
};
pub use render::{landing_offsets, refract_render, refracted_offset, LightingPreset, RenderConfig};
pub use surface::{
    decay_factor, ripple_amplitude_factor, vortex_profile, vortex_surface, Phase, Schedule, SurfaceParams, SurfaceState,
};
pub use video::{synth_video, SynthConfig};
