use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stage::{evaluate_classify, init_model, run_stage, StageData};
use super::{Stage, TrainConfig};
use crate::analysis::{confusion_matrix, proximity};
use crate::dataset::{fluid_table, BasePattern, PatternId};
use crate::synth::{generate_dataset, GenConfig, ViscositySet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiPatternConfig {
    /// Generation settings shared by both arms; viscosities and patterns
    /// are overridden per arm.
    pub gen: GenConfig,
    /// Classes to retrain on; `None` picks the three with the smallest
    /// proximity to their neighbours.
    pub classes: Option<Vec<u8>>,
    pub mono_patterns: Vec<PatternId>,
    /// Composites, each with the coarser pattern on the right.
    pub multi_patterns: Vec<PatternId>,
    pub train: TrainConfig,
    pub workers: usize,
}

impl Default for MultiPatternConfig {
    fn default() -> Self {
        let multi = |l, r| PatternId::Multi { left: l, right: r };
        Self {
            gen: GenConfig {
                repeats: 2,
                ..GenConfig::default()
            },
            classes: None,
            mono_patterns: PatternId::standard().to_vec(),
            multi_patterns: vec![
                multi(BasePattern::Noise(1), BasePattern::Noise(3)),
                multi(BasePattern::Noise(1), BasePattern::Checkerboard),
                multi(BasePattern::Noise(2), BasePattern::Noise(3)),
                multi(BasePattern::Noise(2), BasePattern::Checkerboard),
            ],
            train: TrainConfig {
                epochs: 20,
                ..TrainConfig::default()
            },
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub patterns: Vec<PatternId>,
    pub train_samples: usize,
    pub val_samples: usize,
    /// Validation accuracy per retrained class, in `classes` order.
    pub per_class_accuracy: Vec<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPatternReport {
    pub classes: Vec<u8>,
    /// Neighbour proximity of each retrained class over the reference table.
    pub proximity: Vec<f64>,
    pub mono: ArmResult,
    pub multi: ArmResult,
    /// `multi - mono` per class.
    pub delta_per_class: Vec<f64>,
    pub delta_mean: f64,
}

/// The `n` reference classes closest to their neighbours, ascending by id.
pub fn closest_classes(n: usize) -> Result<Vec<u8>> {
    let table = fluid_table();
    let d = proximity(&table.iter().map(|f| f.kinematic_viscosity).collect::<Vec<_>>())?;
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut picked: Vec<u8> = order.into_iter().take(n).map(|i| table[i].class_id).collect();
    picked.sort_unstable();
    Ok(picked)
}

fn check_composites(ids: &[PatternId]) -> Result<()> {
    for id in ids {
        if !matches!(id, PatternId::Multi { .. }) {
            return Err(Error::InvalidConfig(format!("`{id}` is not a composite pattern")));
        }
    }
    Ok(())
}

fn arm_gen(config: &MultiPatternConfig, classes: &[u8], patterns: &[PatternId]) -> Result<GenConfig> {
    let mut gen = config.gen.clone();
    gen.viscosities = ViscositySet::Classes { ids: classes.to_vec() };
    gen.patterns.ids = patterns.to_vec();
    // building the sheets rejects coarse-left composites
    gen.patterns()?;
    Ok(gen)
}

fn run_arm(config: &MultiPatternConfig, gen: &GenConfig, classes: &[u8], dir: &Path) -> Result<ArmResult> {
    generate_dataset(gen, &dir.join("data"), config.workers)?;
    let tc = TrainConfig {
        stage: Stage::PretrainClassify,
        init_checkpoint: None,
        ..config.train.clone()
    };
    let data = StageData::from_manifest(&dir.join("data/manifest.jsonl"))?;
    let mut model = init_model(&tc)?;
    let report = run_stage(&tc, &data, &mut model, dir)?;
    let (_, accuracy, preds) = evaluate_classify(&model, &data.val)?;
    let labels: Vec<usize> = data.val.iter().map(|c| usize::from(c.class_id)).collect();
    let cm = confusion_matrix(&preds, &labels, model.config.num_classes)?;
    Ok(ArmResult {
        patterns: gen.patterns.ids.clone(),
        train_samples: report.train_samples,
        val_samples: report.val_samples,
        per_class_accuracy: classes
            .iter()
            .map(|&c| cm.per_class_accuracy[usize::from(c)].unwrap_or(0.0))
            .collect(),
        accuracy,
    })
}

/// Retrains the classifier on the closest classes twice, once on single
/// patterns and once on side-by-side composites, and reports the per-class
/// accuracy change.
pub fn multipattern_experiment(config: &MultiPatternConfig, out_dir: &Path) -> Result<MultiPatternReport> {
    check_composites(&config.multi_patterns)?;
    let classes = match &config.classes {
        Some(c) => c.clone(),
        None => closest_classes(3)?,
    };
    let table = fluid_table();
    let d = proximity(&table.iter().map(|f| f.kinematic_viscosity).collect::<Vec<_>>())?;
    let prox = classes
        .iter()
        .map(|&c| {
            d.get(usize::from(c))
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("unknown class id {c}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mono_gen = arm_gen(config, &classes, &config.mono_patterns)?;
    let multi_gen = arm_gen(config, &classes, &config.multi_patterns)?;
    let mono = run_arm(config, &mono_gen, &classes, &out_dir.join("mono"))?;
    let multi = run_arm(config, &multi_gen, &classes, &out_dir.join("multi"))?;
    let delta_per_class: Vec<f64> = multi
        .per_class_accuracy
        .iter()
        .zip(&mono.per_class_accuracy)
        .map(|(m, s)| m - s)
        .collect();
    let delta_mean = delta_per_class.iter().sum::<f64>() / delta_per_class.len().max(1) as f64;
    Ok(MultiPatternReport {
        classes,
        proximity: prox,
        mono,
        multi,
        delta_per_class,
        delta_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_classes_are_one_two_three() {
        assert_eq!(closest_classes(3).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn coarse_left_composites_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = MultiPatternConfig {
            multi_patterns: vec![PatternId::Multi {
                left: BasePattern::Noise(3),
                right: BasePattern::Noise(1),
            }],
            ..MultiPatternConfig::default()
        };
        let err = multipattern_experiment(&cfg, dir.path()).unwrap_err();
        assert!(err.to_string().contains("coarse"), "{err}");

        let cfg = MultiPatternConfig {
            multi_patterns: vec![PatternId::NOISE_1],
            ..MultiPatternConfig::default()
        };
        assert!(matches!(
            multipattern_experiment(&cfg, dir.path()),
            Err(Error::InvalidConfig(_))
        ));
    }
}
