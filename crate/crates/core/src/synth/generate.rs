use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pattern_for_id, synth_video, BackgroundPattern, RenderConfig, SynthConfig};
use crate::dataset::{
    fluid_table, log_spaced_levels, save_manifest, split_dataset, write_video, BasePattern, DatasetManifest, FluidSpec,
    ManifestEntry, MixingCondition, NormalizationStats, PatternId, Source, Split, VideoConfig, VideoSample,
};
use crate::{seed, Error, Result};

/// Which fluids to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscositySet {
    /// The ten reference mixtures.
    Table,
    /// A subset of the reference mixtures by class id.
    Classes { ids: Vec<u8> },
    /// `levels` log-spaced viscosities across the reference range, each
    /// labelled with its nearest reference class.
    LogSpaced { levels: usize },
}

impl ViscositySet {
    pub fn fluids(&self) -> Result<Vec<FluidSpec>> {
        match self {
            ViscositySet::Table => Ok(fluid_table()),
            ViscositySet::Classes { ids } => {
                let table = fluid_table();
                ids.iter()
                    .map(|&c| {
                        table
                            .get(usize::from(c))
                            .copied()
                            .ok_or_else(|| Error::InvalidConfig(format!("unknown class id {c}")))
                    })
                    .collect()
            }
            ViscositySet::LogSpaced { levels } => log_spaced_levels(*levels),
        }
    }
}

/// Background pattern choices and geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternParams {
    pub ids: Vec<PatternId>,
    /// Pattern side in pixels; `None` picks 1.5x the image rounded up to 16.
    pub size: Option<usize>,
    /// Cell size of noise-scale-1; each further level doubles it.
    pub noise_base_cell: usize,
    pub checker_cell: usize,
}

impl Default for PatternParams {
    fn default() -> Self {
        Self {
            ids: PatternId::standard().to_vec(),
            size: None,
            noise_base_cell: 2,
            checker_cell: 8,
        }
    }
}

impl PatternParams {
    pub fn side(&self, video: &VideoConfig) -> usize {
        self.size.unwrap_or_else(|| {
            let m = usize::from(video.height.max(video.width));
            (m * 3 / 2).div_ceil(16) * 16
        })
    }
}

/// A generation run: the full product of fluids, speeds, patterns and
/// repeats, with a seeded lighting preset per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub synth: SynthConfig,
    pub viscosities: ViscositySet,
    pub omegas_rpm: Vec<f64>,
    pub patterns: PatternParams,
    pub lighting_ids: Vec<u8>,
    pub repeats: u32,
    /// s; the decay phase fills the rest of the clip.
    pub steady_duration: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            viscosities: ViscositySet::Table,
            omegas_rpm: evenly_spaced(270.0, 450.0, 5),
            patterns: PatternParams::default(),
            lighting_ids: vec![0],
            repeats: 1,
            steady_duration: 1.5,
            train_fraction: 0.5,
            seed: 0,
        }
    }
}

fn evenly_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// One planned clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub index: usize,
    pub fluid: FluidSpec,
    pub condition: MixingCondition,
    pub seed: u64,
}

impl SampleSpec {
    pub fn sample_id(&self) -> String {
        format!("syn-{:05}", self.index)
    }
}

impl GenConfig {
    /// Full-scale reference: 50 viscosity levels, 50 procedural patterns,
    /// full-size clips.
    pub fn full_scale() -> Self {
        Self {
            synth: SynthConfig {
                video: VideoConfig::FULL,
                ..SynthConfig::default()
            },
            viscosities: ViscositySet::LogSpaced { levels: 50 },
            omegas_rpm: evenly_spaced(270.0, 450.0, 10),
            patterns: PatternParams {
                ids: (0..50).map(|k| PatternId::Single(BasePattern::Procedural(k))).collect(),
                ..PatternParams::default()
            },
            lighting_ids: (0..5).collect(),
            repeats: 1,
            steady_duration: 2.5,
            train_fraction: 0.5,
            seed: 0,
        }
    }

    /// A visually shifted copy standing in for recorded footage: doubled
    /// sensor noise, all five lighting presets and fresh pattern and noise
    /// realizations.
    pub fn shifted(&self) -> Self {
        Self {
            synth: SynthConfig {
                render: RenderConfig {
                    noise_level: self.synth.render.noise_level * 2.0,
                    ..self.synth.render
                },
                ..self.synth
            },
            lighting_ids: (0..5).collect(),
            seed: seed::derive(self.seed, &[0x5b1f7]),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        let clip = self.synth.video.duration();
        if !(self.steady_duration >= 0.0 && self.steady_duration <= clip) {
            return Err(Error::InvalidConfig(format!(
                "steady duration {} s outside clip of {clip} s",
                self.steady_duration
            )));
        }
        if self.omegas_rpm.is_empty() || self.patterns.ids.is_empty() || self.lighting_ids.is_empty() {
            return Err(Error::InvalidConfig(
                "omegas, patterns and lighting ids must be non-empty".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.patterns.noise_base_cell == 0 || self.patterns.checker_cell == 0 {
            return Err(Error::InvalidConfig("pattern cell sizes must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Number of samples the run produces.
    pub fn sample_count(&self) -> Result<usize> {
        Ok(self.viscosities.fluids()?.len() * self.omegas_rpm.len() * self.patterns.ids.len() * self.repeats as usize)
    }

    /// Enumerates the clips in a fixed order: fluid, speed, pattern, repeat.
    pub fn plan(&self) -> Result<Vec<SampleSpec>> {
        self.validate()?;
        let fluids = self.viscosities.fluids()?;
        let decay = self.synth.video.duration() - self.steady_duration;
        let mut out = Vec::with_capacity(self.sample_count()?);
        for fluid in &fluids {
            for &omega in &self.omegas_rpm {
                for &pattern_id in &self.patterns.ids {
                    for _ in 0..self.repeats {
                        let index = out.len();
                        let s = seed::derive(self.seed, &[0x5a3_91e, index as u64]);
                        let mut rng = seed::rng(s, &[0x11947]);
                        let lighting_id = self.lighting_ids[rng.random_range(0..self.lighting_ids.len())];
                        let condition = MixingCondition {
                            omega_rpm: omega,
                            pattern_id,
                            lighting_id,
                            steady_duration: self.steady_duration,
                            decay_duration: decay,
                        };
                        condition.validate(self.synth.video.duration())?;
                        out.push(SampleSpec {
                            index,
                            fluid: *fluid,
                            condition,
                            seed: s,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// The background sheet for each pattern id, fixed for the whole run.
    pub fn patterns(&self) -> Result<BTreeMap<String, BackgroundPattern>> {
        let side = self.patterns.side(&self.synth.video);
        let pattern_seed = seed::derive(self.seed, &[0x9a77e7]);
        let mut out = BTreeMap::new();
        for id in &self.patterns.ids {
            let p = pattern_for_id(
                *id,
                (side, side),
                self.patterns.noise_base_cell,
                self.patterns.checker_cell,
                pattern_seed,
            )?;
            out.insert(id.to_string(), p);
        }
        Ok(out)
    }

    pub fn render(&self, spec: &SampleSpec, patterns: &BTreeMap<String, BackgroundPattern>) -> Result<VideoSample> {
        let key = spec.condition.pattern_id.to_string();
        let pattern = patterns
            .get(&key)
            .ok_or_else(|| Error::InvalidConfig(format!("pattern `{key}` not prepared")))?;
        let cfg = SynthConfig {
            render: RenderConfig {
                seed: spec.seed,
                ..self.synth.render
            },
            ..self.synth
        };
        let mut sample = synth_video(&spec.fluid, &spec.condition, pattern, &cfg)?;
        sample.sample_id = spec.sample_id();
        Ok(sample)
    }
}

/// Renders every planned clip into `out_dir/videos/` and writes a split
/// manifest to `out_dir/manifest.jsonl`.
///
/// Samples render in parallel on `workers` threads; the manifest is
/// assembled in plan order so the output does not depend on scheduling.
pub fn generate_dataset(config: &GenConfig, out_dir: &Path, workers: usize) -> Result<DatasetManifest> {
    let plan = config.plan()?;
    let patterns = config.patterns()?;
    let video_dir = out_dir.join("videos");
    std::fs::create_dir_all(&video_dir).map_err(|e| Error::io(&video_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let fps = config.synth.video.fps;

    let entries: Vec<ManifestEntry> = pool.install(|| {
        plan.par_iter()
            .map(|spec| {
                let sample = config.render(spec, &patterns)?;
                let rel = format!("videos/{}.vnv", sample.sample_id);
                write_video(&out_dir.join(&rel), &sample.frames, fps)?;
                Ok(ManifestEntry {
                    sample_id: sample.sample_id,
                    path: rel,
                    class_id: spec.fluid.class_id,
                    nu: spec.fluid.kinematic_viscosity,
                    omega_rpm: spec.condition.omega_rpm,
                    pattern_id: spec.condition.pattern_id,
                    lighting_id: spec.condition.lighting_id,
                    source: Source::Synthetic,
                    split: Split::None,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let unsplit = DatasetManifest {
        norm_stats: NormalizationStats::from_viscosities(entries.iter().map(|e| e.nu))?,
        entries,
        video_config: config.synth.video,
    };
    let manifest = if unsplit.entries.len() >= 2 {
        split_dataset(&unsplit, config.train_fraction, seed::derive(config.seed, &[0x5b117]))?
    } else {
        unsplit
    };
    save_manifest(&manifest, &out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
