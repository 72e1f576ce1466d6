use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stage::{run_stage, StageData};
use super::{Stage, TrainConfig};
use crate::model::ViscNet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Pretrained,
    Scratch,
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Pretrained => "pretrained",
            Arm::Scratch => "scratch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Shares of the fine-tuning training split, each in (0, 1].
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Run the arm that starts from `pretrained_checkpoint`.
    pub with_pretrain: bool,
    /// Run the arm that starts from random weights.
    pub with_scratch: bool,
    pub pretrained_checkpoint: Option<PathBuf>,
    /// Fine-tuning settings shared by every run; stage, seed, subset and
    /// init checkpoint are set per run.
    pub train: TrainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.25, 0.5, 1.0],
            seeds: vec![0, 1, 2],
            with_pretrain: true,
            with_scratch: true,
            pretrained_checkpoint: None,
            train: TrainConfig {
                stage: Stage::FinetuneClassify,
                epochs: 10,
                ..TrainConfig::default()
            },
        }
    }
}

impl SweepConfig {
    pub fn arms(&self) -> Vec<Arm> {
        let mut arms = Vec::new();
        if self.with_pretrain {
            arms.push(Arm::Pretrained);
        }
        if self.with_scratch {
            arms.push(Arm::Scratch);
        }
        arms
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() || self.seeds.is_empty() || self.arms().is_empty() {
            return Err(Error::InvalidConfig(
                "sweep needs fractions, seeds and at least one arm".into(),
            ));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::Domain(format!("fraction {f} outside (0, 1]")));
        }
        if self.with_pretrain && self.pretrained_checkpoint.is_none() {
            return Err(Error::InvalidConfig(
                "pretrained arm needs pretrained_checkpoint".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub arm: Arm,
    pub fraction: f64,
    pub seed: u64,
    pub train_samples: usize,
    /// Validation accuracy after the last epoch.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub arm: Arm,
    pub fraction: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub runs: usize,
}

/// Accuracy-vs-fraction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub runs: Vec<SweepRun>,
    pub summary: Vec<SweepCell>,
}

impl SweepTable {
    pub fn from_runs(runs: Vec<SweepRun>) -> Self {
        let mut keys: Vec<(Arm, f64)> = Vec::new();
        for r in &runs {
            if !keys.iter().any(|&(a, f)| a == r.arm && f == r.fraction) {
                keys.push((r.arm, r.fraction));
            }
        }
        let summary = keys
            .into_iter()
            .map(|(arm, fraction)| {
                let accs: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.arm == arm && r.fraction == fraction)
                    .map(|r| r.accuracy)
                    .collect();
                let n = accs.len() as f64;
                let mean = accs.iter().sum::<f64>() / n;
                let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
                SweepCell {
                    arm,
                    fraction,
                    mean_accuracy: mean,
                    std_accuracy: var.sqrt(),
                    runs: accs.len(),
                }
            })
            .collect();
        Self { runs, summary }
    }

    pub fn mean(&self, arm: Arm, fraction: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|c| c.arm == arm && c.fraction == fraction)
            .map(|c| c.mean_accuracy)
    }

    /// `arm,fraction,seed,train_samples,accuracy`, one row per run.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("arm,fraction,seed,train_samples,accuracy\n");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.arm.as_str(),
                r.fraction,
                r.seed,
                r.train_samples,
                r.accuracy
            );
        }
        s
    }
}

/// Fine-tunes at each training-data fraction, from the pretrained
/// checkpoint and/or from scratch, for every seed. Scratch runs use the
/// pretrained architecture when one is given.
pub fn data_efficiency_sweep(config: &SweepConfig, data: &StageData, out_dir: &Path) -> Result<SweepTable> {
    config.validate()?;
    let pretrained = config.pretrained_checkpoint.as_deref().map(ViscNet::load).transpose()?;
    let arch = pretrained.as_ref().map_or(config.train.model, |(m, _)| m.config);
    let mut runs = Vec::new();
    for arm in config.arms() {
        for &fraction in &config.fractions {
            for &seed in &config.seeds {
                let tc = TrainConfig {
                    stage: Stage::FinetuneClassify,
                    seed,
                    train_subset: (fraction < 1.0).then_some(fraction),
                    init_checkpoint: match arm {
                        Arm::Pretrained => config.pretrained_checkpoint.clone(),
                        Arm::Scratch => None,
                    },
                    model: arch,
                    ..config.train.clone()
                };
                let mut model = match arm {
                    Arm::Pretrained => super::init_model(&tc)?,
                    Arm::Scratch => ViscNet::new(crate::model::ModelConfig { seed, ..arch })?,
                };
                let dir = out_dir.join(format!("{}-f{fraction}-s{seed}", arm.as_str()));
                let report = run_stage(&tc, data, &mut model, &dir)?;
                let accuracy = report.last().val_accuracy.unwrap_or(0.0);
                log::info!("sweep {arm:?} fraction {fraction} seed {seed}: accuracy {accuracy:.3}");
                runs.push(SweepRun {
                    arm,
                    fraction,
                    seed,
                    train_samples: report.train_samples,
                    accuracy,
                });
            }
        }
    }
    Ok(SweepTable::from_runs(runs))
}
