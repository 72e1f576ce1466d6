use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;
use crate::{Error, Result};

/// Curriculum stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PretrainClassify,
    FinetuneClassify,
    Regress,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::PretrainClassify => "pretrain_classify",
            Stage::FinetuneClassify => "finetune_classify",
            Stage::Regress => "regress",
        }
    }

    pub fn is_classify(&self) -> bool {
        !matches!(self, Stage::Regress)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain_classify" => Ok(Stage::PretrainClassify),
            "finetune_classify" => Ok(Stage::FinetuneClassify),
            "regress" => Ok(Stage::Regress),
            _ => Err(Error::InvalidConfig(format!("unknown stage `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub stage: Stage,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Checkpoint to start from. Required for `regress`, which must start
    /// from a classification checkpoint.
    pub init_checkpoint: Option<PathBuf>,
    /// Architecture for a fresh model; ignored when `init_checkpoint` is set.
    pub model: ModelConfig,
    /// Share of the optimizer steps spent in linear warmup.
    pub warmup_fraction: f64,
    pub grad_clip: f64,
    /// Use only this stratified share of the training split.
    pub train_subset: Option<f64>,
    /// Random flips and quarter turns of training clips.
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            stage: Stage::PretrainClassify,
            epochs: 20,
            batch_size: 16,
            learning_rate: 1e-3,
            weight_decay: 0.05,
            seed: 0,
            init_checkpoint: None,
            model: ModelConfig::compact(),
            warmup_fraction: 0.05,
            grad_clip: 1.0,
            train_subset: None,
            augment: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage == Stage::Regress && self.init_checkpoint.is_none() {
            return Err(Error::Curriculum(
                "regress needs init_checkpoint from a pretrain_classify or finetune_classify run".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) || !(self.grad_clip > 0.0) {
            return Err(Error::InvalidConfig(
                "learning_rate and grad_clip must be positive, weight_decay non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::InvalidConfig(format!(
                "warmup_fraction {} outside [0, 1)",
                self.warmup_fraction
            )));
        }
        if let Some(f) = self.train_subset {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Domain(format!("train_subset {f} outside (0, 1]")));
            }
        }
        if self.init_checkpoint.is_none() {
            self.model.validate()?;
        }
        Ok(())
    }
}
