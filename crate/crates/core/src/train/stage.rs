use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::data::{epoch_batches, load_split, stratified_subset, Clip};
use super::loss::{cross_entropy, nll_raw};
use super::{Stage, TrainConfig};
use crate::dataset::{load_manifest, NormalizationStats, Split};
use crate::model::{MixtureParams, ViscNet};
use crate::nn::{clip_grad_norm, cosine_lr, AdamW, Module};
use crate::{seed, Error, Result};

/// Checkpoint metadata keys.
pub const META_STAGE: &str = "stage";
pub const META_EPOCH: &str = "epoch";
pub const META_NORM_STATS: &str = "norm_stats";

/// Train and validation clips plus the target normalization.
#[derive(Debug, Clone)]
pub struct StageData {
    pub train: Vec<Clip>,
    pub val: Vec<Clip>,
    pub norm_stats: NormalizationStats,
}

impl StageData {
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let manifest = load_manifest(path)?;
        Ok(Self {
            train: load_split(path, &manifest, Split::Train)?,
            val: load_split(path, &manifest, Split::Val)?,
            norm_stats: manifest.norm_stats,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    /// Mean absolute error of the mixture mean in normalized log space.
    pub val_mae: Option<f64>,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub stage: Stage,
    pub epochs: usize,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_checkpoint: PathBuf,
    pub final_checkpoint: PathBuf,
    pub train_samples: usize,
    pub val_samples: usize,
    pub norm_stats: NormalizationStats,
    /// Validation MAE of always predicting the training-target mean
    /// (regression only).
    pub baseline_mae: Option<f64>,
    pub wall_clock_s: f64,
}

impl TrainReport {
    pub fn last(&self) -> &EpochStats {
        self.history.last().expect("at least one epoch")
    }

    /// The report with wall-clock time zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_s: 0.0,
            ..self.clone()
        }
    }
}

/// Builds the starting model: the init checkpoint when given (checking
/// curriculum order), a fresh model seeded from the run seed otherwise.
pub fn init_model(config: &TrainConfig) -> Result<ViscNet> {
    config.validate()?;
    let Some(path) = &config.init_checkpoint else {
        return ViscNet::new(crate::model::ModelConfig {
            seed: config.seed,
            ..config.model
        });
    };
    let (net, meta) = ViscNet::load(path)?;
    let from = meta.get(META_STAGE).map(|s| s.parse::<Stage>()).transpose()?;
    match (config.stage, from) {
        (Stage::Regress, Some(s)) if s.is_classify() => Ok(net),
        (Stage::Regress, _) => Err(Error::Curriculum(format!(
            "regress must start from a pretrain_classify or finetune_classify checkpoint; {} is {}",
            path.display(),
            from.map_or("unlabelled".to_string(), |s| s.to_string())
        ))),
        (_, Some(s)) if s.is_classify() => Ok(net),
        (stage, _) => Err(Error::Curriculum(format!(
            "{stage} must start from a classification checkpoint; {} is not one",
            path.display()
        ))),
    }
}

/// Mean cross-entropy, accuracy and predicted classes over `clips`.
pub fn evaluate_classify(model: &ViscNet, clips: &[Clip]) -> Result<(f64, f64, Vec<usize>)> {
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(clips.len());
    for c in clips {
        let f = model.forward(c.frames.view(), c.omega_rpm)?;
        loss += cross_entropy(f.logits.view(), usize::from(c.class_id))?.0;
        preds.push(argmax(&f.logits));
    }
    let n = clips.len().max(1) as f64;
    let correct = preds
        .iter()
        .zip(clips)
        .filter(|(p, c)| **p == usize::from(c.class_id))
        .count();
    Ok((loss / n, correct as f64 / n, preds))
}

/// Mean NLL, MAE of the mixture mean, and the mixtures, over `clips`.
pub fn evaluate_regress(
    model: &ViscNet,
    clips: &[Clip],
    stats: &NormalizationStats,
) -> Result<(f64, f64, Vec<MixtureParams>)> {
    let floor = model.config.sigma_floor;
    let (mut nll, mut mae) = (0.0, 0.0);
    let mut mixtures = Vec::with_capacity(clips.len());
    for c in clips {
        let f = model.forward(c.frames.view(), c.omega_rpm)?;
        let raw: Vec<f64> = f.gmm_raw.iter().map(|&v| f64::from(v)).collect();
        let y = c.target(stats)?;
        nll += nll_raw(&raw, y, floor)?.0;
        let m = model.mixture(&f.gmm_raw)?;
        mae += (m.mean() - y).abs();
        mixtures.push(m);
    }
    let n = clips.len().max(1) as f64;
    Ok((nll / n, mae / n, mixtures))
}

pub(crate) fn argmax(v: &Array1<f32>) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f32::NEG_INFINITY),
            |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) },
        )
        .0
}

fn check_shapes(model: &ViscNet, data: &StageData) -> Result<()> {
    let [t, h, w] = model.config.input;
    for c in data.train.iter().chain(&data.val) {
        let (ct, ch, cw, _) = c.frames.dim();
        if (ct, ch, cw) != (t, h, w) {
            return Err(Error::Shape {
                axis: "frames",
                detail: format!(
                    "clip {} is {:?}, model expects {:?}",
                    c.sample_id,
                    (ct, ch, cw),
                    (t, h, w)
                ),
            });
        }
        if usize::from(c.class_id) >= model.config.num_classes {
            return Err(Error::Domain(format!(
                "class {} outside the model's classes",
                c.class_id
            )));
        }
    }
    Ok(())
}

/// Runs one curriculum stage. Writes `{stage}-last.safetensors` after every
/// epoch and `{stage}-best.safetensors` whenever validation improves
/// (accuracy for classification, NLL for regression).
pub fn run_stage(config: &TrainConfig, data: &StageData, model: &mut ViscNet, out_dir: &Path) -> Result<TrainReport> {
    config.validate()?;
    check_shapes(model, data)?;
    let started = Instant::now();
    let stage = config.stage;
    let idx = match config.train_subset {
        Some(f) => stratified_subset(&data.train, f, config.seed)?,
        None => (0..data.train.len()).collect(),
    };
    if idx.is_empty() {
        return Err(Error::InvalidManifest("no training samples".into()));
    }
    let stats = data.norm_stats;
    let targets: Vec<f64> = idx
        .iter()
        .map(|&i| data.train[i].target(&stats))
        .collect::<Result<_>>()?;

    let b = config.batch_size;
    let steps_per_epoch = idx.len().div_ceil(b);
    let total = steps_per_epoch * config.epochs;
    let warmup = (config.warmup_fraction * total as f64).round() as usize;
    let mut opt = AdamW::new(config.weight_decay as f32);
    let floor = model.config.sigma_floor;
    let scale = 1.0 / b as f32;

    let last_path = out_dir.join(format!("{stage}-last.safetensors"));
    let best_path = out_dir.join(format!("{stage}-best.safetensors"));
    let mut meta = BTreeMap::new();
    meta.insert(META_STAGE.to_string(), stage.to_string());
    meta.insert(META_NORM_STATS.to_string(), serde_json::to_string(&stats)?);

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, f64)> = None;
    let mut step = 0;
    model.zero_grad();
    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut lr = 0.0;
        for batch in epoch_batches(idx.len(), b, config.seed, epoch) {
            for &j in &batch {
                let clip = &data.train[idx[j]];
                let code = if config.augment {
                    (seed::derive(config.seed, &[0xd4, epoch as u64, j as u64]) % 8) as u8
                } else {
                    0
                };
                let moved;
                let frames = if code == 0 {
                    clip.frames.view()
                } else {
                    moved = clip.transformed(code);
                    moved.view()
                };
                let (fwd, tape) = model.forward_train(frames, clip.omega_rpm)?;
                if stage.is_classify() {
                    let (l, g) = cross_entropy(fwd.logits.view(), usize::from(clip.class_id))?;
                    model.backward(&tape, Some(&(g * scale)), None);
                    loss_sum += l;
                } else {
                    let raw: Vec<f64> = fwd.gmm_raw.iter().map(|&v| f64::from(v)).collect();
                    let (l, g) = nll_raw(&raw, targets[j], floor)?;
                    let g = Array1::from_iter(g.into_iter().map(|v| v as f32 * scale));
                    model.backward(&tape, None, Some(&g));
                    loss_sum += l;
                }
                seen += 1;
            }
            clip_grad_norm(model, config.grad_clip);
            lr = cosine_lr(config.learning_rate, step, total, warmup);
            opt.step(model, lr as f32);
            model.zero_grad();
            step += 1;
        }
        let train_loss = loss_sum / seen as f64;
        if !train_loss.is_finite() {
            return Err(Error::Domain(format!(
                "{stage}: training loss diverged at epoch {epoch}"
            )));
        }

        let (val_loss, val_accuracy, val_mae) = if data.val.is_empty() {
            (None, None, None)
        } else if stage.is_classify() {
            let (l, a, _) = evaluate_classify(model, &data.val)?;
            (Some(l), Some(a), None)
        } else {
            let (l, m, _) = evaluate_regress(model, &data.val, &stats)?;
            (Some(l), None, Some(m))
        };
        let stats_row = EpochStats {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
            val_mae,
            learning_rate: lr,
        };
        log::info!(
            "{stage} epoch {epoch}: train {train_loss:.4} val {:?} acc {:?} mae {:?}",
            val_loss,
            val_accuracy,
            val_mae
        );

        meta.insert(META_EPOCH.to_string(), epoch.to_string());
        model.save(&last_path, &meta)?;
        // (accuracy, -loss), larger is better; without validation the last epoch wins
        let key = match val_loss {
            Some(l) => (val_accuracy.unwrap_or(0.0), -l),
            None => (0.0, epoch as f64),
        };
        let improved = match best {
            None => true,
            Some((_, a, l)) => key.0 > a || (key.0 == a && key.1 > l),
        };
        if improved {
            best = Some((epoch, key.0, key.1));
            model.save(&best_path, &meta)?;
        }
        history.push(stats_row);
    }

    let baseline_mae = if stage.is_classify() || data.val.is_empty() {
        None
    } else {
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let errs = data
            .val
            .iter()
            .map(|c| Ok((c.target(&stats)? - mean).abs()))
            .collect::<Result<Vec<f64>>>()?;
        Some(errs.iter().sum::<f64>() / errs.len() as f64)
    };

    Ok(TrainReport {
        stage,
        epochs: config.epochs,
        history,
        best_epoch: best.map_or(0, |b| b.0),
        best_checkpoint: best_path,
        final_checkpoint: last_path,
        train_samples: idx.len(),
        val_samples: data.val.len(),
        norm_stats: stats,
        baseline_mae,
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

/// [`init_model`] then [`run_stage`] on a manifest.
pub fn train_from_manifest(
    config: &TrainConfig,
    manifest_path: &Path,
    out_dir: &Path,
) -> Result<(ViscNet, TrainReport)> {
    let mut model = init_model(config)?;
    let data = StageData::from_manifest(manifest_path)?;
    let report = run_stage(config, &data, &mut model, out_dir)?;
    Ok((model, report))
}
