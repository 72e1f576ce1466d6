//! Renders one clip for the thinnest and the thickest reference fluid and
//! writes each as a strip of frames.
//!
//! `cargo run --release --example render_clip -- [out_dir]`

use std::path::PathBuf;

use ndarray::Axis;
use viscnet::dataset::{fluid_table, MixingCondition, PatternId};
use viscnet::synth::{pattern_for_id, synth_video, SynthConfig};

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/render_clip".into()));
    std::fs::create_dir_all(&out)?;
    let config = SynthConfig::default();
    let video = config.video;
    let pattern = pattern_for_id(PatternId::NOISE_2, (96, 96), 2, 8, 0)?;
    let table = fluid_table();

    for fluid in [table[0], table[9]] {
        let condition = MixingCondition {
            omega_rpm: 450.0,
            pattern_id: PatternId::NOISE_2,
            lighting_id: 0,
            steady_duration: 1.5,
            decay_duration: video.duration() - 1.5,
        };
        let sample = synth_video(&fluid, &condition, &pattern, &config)?;
        let frames = &sample.frames;
        let (t, h, w, _) = frames.dim();

        // mean absolute change between consecutive frames
        let motion: Vec<String> = (1..t)
            .map(|i| {
                let a = frames.index_axis(Axis(0), i - 1);
                let b = frames.index_axis(Axis(0), i);
                let d = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| (f64::from(*x) - f64::from(*y)).abs())
                    .sum::<f64>();
                format!("{:.2}", d / a.len() as f64)
            })
            .collect();
        println!(
            "class {} (nu = {:.3e} m^2/s): frame motion {}",
            fluid.class_id,
            fluid.kinematic_viscosity,
            motion.join(" ")
        );

        let strip = image::RgbImage::from_fn((w * t) as u32, h as u32, |x, y| {
            let (f, x) = (x as usize / w, x as usize % w);
            image::Rgb([0, 1, 2].map(|c| frames[[f, y as usize, x, c]]))
        });
        let path = out.join(format!("class{}.png", fluid.class_id));
        strip.save(&path)?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
