use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{load_config, require_file, resolve, write_json, write_text, CommandOutput, RunConfig};
use crate::analysis::{
    accuracy_vs_proximity, bin_attention, center_of_mass_radius, confusion_matrix, dimensionless_numbers, grid_center,
    proximity, radial_attention_profile, AttentionBin, ConfusionMatrix, GeometrySpec, LogFit,
};
use crate::dataset::{fluid_table, load_manifest, nearest_class, target_transform, NormalizationStats, Split};
use crate::model::{predict_viscosity, AttentionRecord, MixtureParams, ViscNet};
use crate::train::{load_split, Clip, Stage, META_NORM_STATS, META_STAGE};
use crate::uq::{
    ause, calibrate, calibration_error, empirical_coverage, mae_log, sparsification, CalibrationResult, CoverageLevel,
    CoverageMode, PredictiveDistribution, SparsificationConfig, SparsificationCurve, DEFAULT_LEVELS,
};
use crate::{seed, Error, Result};

fn default_levels() -> Vec<f64> {
    DEFAULT_LEVELS.to_vec()
}

fn default_bins() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub coverage_mode: CoverageMode,
    #[serde(default)]
    pub sparsification: SparsificationConfig,
    #[serde(default)]
    pub geometry: GeometrySpec,
    /// Quantile bins per dimensionless number for the attention summary.
    #[serde(default = "default_bins")]
    pub attention_bins: usize,
    /// Calibration report to apply; defaults to the one next to the
    /// checkpoint when present.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub coverage_mode: CoverageMode,
    /// Seeds the split of the validation set into fitting and held-out halves.
    #[serde(default)]
    pub seed: u64,
}

/// Fitted scale with coverage on the fitting half and on the held-out half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub checkpoint: PathBuf,
    pub s: f64,
    pub levels: Vec<f64>,
    pub coverage_mode: CoverageMode,
    pub seed: u64,
    pub fit_samples: usize,
    pub holdout_samples: usize,
    pub fit: CalibrationResult,
    pub holdout_coverage_before: Vec<CoverageLevel>,
    pub holdout_coverage_after: Vec<CoverageLevel>,
    pub holdout_ce_before: f64,
    pub holdout_ce_after: f64,
}

/// Attention maps binned by one dimensionless number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionGroup {
    /// `re`, `ca` or `we`.
    pub number: String,
    pub bins: Vec<AttentionBin>,
    /// Centre-of-mass radius of each bin's radial profile, as a fraction of
    /// the outer radius.
    pub com_radius: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub checkpoint: PathBuf,
    pub stage: Option<Stage>,
    pub samples: usize,
    /// Class-head argmax, or the nearest class of the predicted viscosity
    /// for regression checkpoints.
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Mean absolute error in log10 viscosity.
    pub mae_log: f64,
    /// Mean absolute error in normalized log space.
    pub mae_normalized: f64,
    pub ause_modeled: f64,
    pub ause_random: f64,
    pub ce_before: f64,
    pub ce_after: f64,
    pub s: f64,
    pub calibration_source: Option<PathBuf>,
    pub coverage_before: Vec<CoverageLevel>,
    pub coverage_after: Vec<CoverageLevel>,
    pub sparsification: SparsificationCurve,
    /// Neighbour proximity of every reference class.
    pub proximity: Vec<f64>,
    /// Per-class accuracy against `ln D`; `None` with fewer than two usable
    /// classes.
    pub proximity_fit: Option<LogFit>,
    /// `None` with fewer samples than bins.
    pub attention: Option<Vec<AttentionGroup>>,
}

/// One evaluated clip.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    pub class_id: u8,
    pub predicted_class: usize,
    pub nu: f64,
    pub omega_rpm: f64,
    /// In normalized log space.
    pub mixture: MixtureParams,
    pub attention: AttentionRecord,
}

/// Where `calibrate` stores its report for `checkpoint`.
pub fn calibration_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("calibration.json")
}

struct Loaded {
    model: ViscNet,
    stage: Option<Stage>,
    stats: NormalizationStats,
    val: Vec<Clip>,
}

fn load(checkpoint: &Path, manifest_path: &Path) -> Result<Loaded> {
    let missing: Vec<String> = [checkpoint, manifest_path]
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let (model, meta) = ViscNet::load(checkpoint)?;
    let manifest = load_manifest(manifest_path)?;
    let stage = meta.get(META_STAGE).map(|s| s.parse::<Stage>()).transpose()?;
    // targets are normalized as they were during training
    let stats = match meta.get(META_NORM_STATS) {
        Some(s) => serde_json::from_str(s)?,
        None => manifest.norm_stats,
    };
    let val = load_split(manifest_path, &manifest, Split::Val)?;
    if val.is_empty() {
        return Err(Error::InvalidManifest(format!(
            "{} has no validation samples",
            manifest_path.display()
        )));
    }
    Ok(Loaded {
        model,
        stage,
        stats,
        val,
    })
}

fn predict(loaded: &Loaded) -> Result<Vec<EvalSample>> {
    loaded
        .val
        .iter()
        .map(|c| {
            let f = loaded.model.forward(c.frames.view(), c.omega_rpm)?;
            let mixture = loaded.model.mixture(&f.gmm_raw)?;
            let predicted_class = match loaded.stage {
                Some(Stage::Regress) => usize::from(nearest_class(predict_viscosity(&mixture, &loaded.stats))),
                _ => crate::train::argmax(&f.logits),
            };
            Ok(EvalSample {
                class_id: c.class_id,
                predicted_class,
                nu: c.nu,
                omega_rpm: c.omega_rpm,
                mixture,
                attention: f.attention,
            })
        })
        .collect()
}

fn attention_groups(
    samples: &[EvalSample],
    geometry: &GeometrySpec,
    bins: usize,
) -> Result<Option<Vec<AttentionGroup>>> {
    if samples.len() < bins {
        return Ok(None);
    }
    let table = fluid_table();
    let mut numbers: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for s in samples {
        let base = table
            .get(usize::from(s.class_id))
            .ok_or_else(|| Error::Domain(format!("class {} outside the fluid table", s.class_id)))?;
        let fluid = crate::dataset::FluidSpec {
            kinematic_viscosity: s.nu,
            ..*base
        };
        let t = dimensionless_numbers(&fluid, s.omega_rpm, geometry)?;
        numbers.entry("re").or_default().push(t.re);
        numbers.entry("ca").or_default().push(t.ca);
        numbers.entry("we").or_default().push(t.we);
    }
    let records: Vec<AttentionRecord> = samples.iter().map(|s| s.attention.clone()).collect();
    ["re", "ca", "we"]
        .into_iter()
        .map(|name| {
            let binned = bin_attention(&records, &numbers[name], bins)?;
            let com_radius = binned
                .iter()
                .map(|b| {
                    b.mean
                        .as_ref()
                        .map(|m| center_of_mass_radius(&radial_attention_profile(m, grid_center(m))))
                })
                .collect();
            Ok(AttentionGroup {
                number: name.to_string(),
                bins: binned,
                com_radius,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Metric suite over evaluated clips; `s` is the calibration scale applied
/// for the `*_after` figures.
pub fn evaluate_samples(
    samples: &[EvalSample],
    stats: &NormalizationStats,
    num_classes: usize,
    s: f64,
    config: &EvalConfig,
) -> Result<EvalMetrics> {
    let labels: Vec<usize> = samples.iter().map(|x| usize::from(x.class_id)).collect();
    let preds: Vec<usize> = samples.iter().map(|x| x.predicted_class).collect();
    let confusion = confusion_matrix(&preds, &labels, num_classes)?;

    let targets = samples
        .iter()
        .map(|x| target_transform(x.nu, stats))
        .collect::<Result<Vec<f64>>>()?;
    let nu_hat: Vec<f64> = samples.iter().map(|x| predict_viscosity(&x.mixture, stats)).collect();
    let nu: Vec<f64> = samples.iter().map(|x| x.nu).collect();
    let errors: Vec<f64> = samples
        .iter()
        .zip(&targets)
        .map(|(x, y)| x.mixture.mean() - y)
        .collect();
    let stds: Vec<f64> = samples.iter().map(|x| x.mixture.variance().sqrt()).collect();
    let mae_normalized = errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64;

    let dists: Vec<PredictiveDistribution> = samples
        .iter()
        .map(|x| PredictiveDistribution::new(x.mixture.clone()))
        .collect();
    let scaled = dists.iter().map(|d| d.with_scale(s)).collect::<Result<Vec<_>>>()?;
    let curve = sparsification(&errors, &stds, &config.sparsification)?;
    let a = ause(&curve);

    let table = fluid_table();
    let d = proximity(&table.iter().map(|f| f.kinematic_viscosity).collect::<Vec<_>>())?;
    let (pd, pa): (Vec<f64>, Vec<f64>) = confusion
        .per_class_accuracy
        .iter()
        .enumerate()
        .filter_map(|(c, acc)| Some((*d.get(c)?, (*acc)?)))
        .unzip();
    let proximity_fit = if pd.len() >= 2 {
        accuracy_vs_proximity(&pd, &pa).ok()
    } else {
        None
    };

    Ok(EvalMetrics {
        checkpoint: config.checkpoint.clone(),
        stage: None,
        samples: samples.len(),
        accuracy: confusion.accuracy,
        confusion,
        mae_log: mae_log(&nu_hat, &nu)?,
        mae_normalized,
        ause_modeled: a.modeled,
        ause_random: a.random,
        ce_before: calibration_error(&dists, &targets, &config.levels, config.coverage_mode)?,
        ce_after: calibration_error(&scaled, &targets, &config.levels, config.coverage_mode)?,
        s,
        calibration_source: None,
        coverage_before: empirical_coverage(&dists, &targets, &config.levels, config.coverage_mode)?,
        coverage_after: empirical_coverage(&scaled, &targets, &config.levels, config.coverage_mode)?,
        sparsification: curve,
        proximity: d,
        proximity_fit,
        attention: attention_groups(samples, &config.geometry, config.attention_bins)?,
    })
}

/// Evaluates a checkpoint on the validation split; writes `metrics.json`,
/// `sparsification.csv` and `predictions.csv`.
pub fn cmd_eval(run: &RunConfig) -> Result<CommandOutput> {
    let mut cfg: EvalConfig = load_config(&run.config_path)?;
    cfg.checkpoint = resolve(&run.config_path, &cfg.checkpoint);
    cfg.manifest = resolve(&run.config_path, &cfg.manifest);
    if let Some(s) = run.seed {
        cfg.sparsification.seed = s;
    }
    let loaded = load(&cfg.checkpoint, &cfg.manifest)?;
    let calibration = match &cfg.calibration {
        Some(p) => {
            let p = resolve(&run.config_path, p);
            require_file(&p)?;
            Some(p)
        }
        None => Some(calibration_path(&cfg.checkpoint)).filter(|p| p.is_file()),
    };
    let s = match &calibration {
        Some(p) => load_config::<CalibrationReport>(p)?.s,
        None => 1.0,
    };

    let samples = predict(&loaded)?;
    let mut metrics = evaluate_samples(&samples, &loaded.stats, loaded.model.config.num_classes, s, &cfg)?;
    metrics.stage = loaded.stage;
    metrics.calibration_source = calibration;

    let mut csv = String::from("sample_id,class_id,predicted_class,nu,nu_hat,mean,std\n");
    for (c, x) in loaded.val.iter().zip(&samples) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.sample_id,
            x.class_id,
            x.predicted_class,
            x.nu,
            predict_viscosity(&x.mixture, &loaded.stats),
            x.mixture.mean(),
            x.mixture.variance().sqrt()
        ));
    }
    let artifacts = vec![
        write_json(&run.output_dir.join("metrics.json"), &metrics)?,
        write_text(
            &run.output_dir.join("sparsification.csv"),
            &metrics.sparsification.to_csv(),
        )?,
        write_text(&run.output_dir.join("predictions.csv"), &csv)?,
    ];
    Ok(CommandOutput {
        lines: vec![
            format!(
                "{} val samples, accuracy {:.3}, mae_log {:.4}",
                metrics.samples, metrics.accuracy, metrics.mae_log
            ),
            format!(
                "ause modeled {:.4}, random {:.4}",
                metrics.ause_modeled, metrics.ause_random
            ),
            format!(
                "ce {:.4} -> {:.4} at s = {:.4}",
                metrics.ce_before, metrics.ce_after, metrics.s
            ),
        ],
        artifacts,
    })
}

/// Seeded split of `n` indices into a fitting half (the larger one for odd
/// `n`) and a held-out half, each ascending.
pub(crate) fn halves(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed, &[0xca11b]));
    let mut fit = idx[..n.div_ceil(2)].to_vec();
    let mut hold = idx[n.div_ceil(2)..].to_vec();
    fit.sort_unstable();
    hold.sort_unstable();
    (fit, hold)
}

/// Fits the global scale on half of the validation split and reports
/// coverage on the other half. The report goes next to the checkpoint and
/// into the output directory.
pub fn cmd_calibrate(run: &RunConfig) -> Result<CommandOutput> {
    let mut cfg: CalibrateConfig = load_config(&run.config_path)?;
    cfg.checkpoint = resolve(&run.config_path, &cfg.checkpoint);
    cfg.manifest = resolve(&run.config_path, &cfg.manifest);
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    let loaded = load(&cfg.checkpoint, &cfg.manifest)?;
    let samples = predict(&loaded)?;
    let targets = samples
        .iter()
        .map(|x| target_transform(x.nu, &loaded.stats))
        .collect::<Result<Vec<f64>>>()?;
    let dists: Vec<PredictiveDistribution> = samples
        .iter()
        .map(|x| PredictiveDistribution::new(x.mixture.clone()))
        .collect();
    let report = calibrate_split(&dists, &targets, &cfg)?;

    let beside = calibration_path(&cfg.checkpoint);
    let artifacts = vec![
        write_json(&beside, &report)?,
        write_json(&run.output_dir.join("calibration.json"), &report)?,
    ];
    Ok(CommandOutput {
        lines: vec![
            format!("s = {:.4} fitted on {} samples", report.s, report.fit_samples),
            format!(
                "held-out ce {:.4} -> {:.4} on {} samples",
                report.holdout_ce_before, report.holdout_ce_after, report.holdout_samples
            ),
        ],
        artifacts,
    })
}

pub(crate) fn calibrate_split(
    dists: &[PredictiveDistribution],
    targets: &[f64],
    cfg: &CalibrateConfig,
) -> Result<CalibrationReport> {
    let (fit_idx, hold_idx) = halves(dists.len(), cfg.seed);
    let pick = |idx: &[usize]| -> (Vec<PredictiveDistribution>, Vec<f64>) {
        idx.iter().map(|&i| (dists[i].clone(), targets[i])).unzip()
    };
    let (fit_d, fit_t) = pick(&fit_idx);
    let (hold_d, hold_t) = pick(&hold_idx);
    let fit = calibrate(&fit_d, &fit_t, &cfg.levels, cfg.coverage_mode)?;
    let hold_scaled = hold_d.iter().map(|d| d.with_scale(fit.s)).collect::<Result<Vec<_>>>()?;
    let holdout_coverage_before = empirical_coverage(&hold_d, &hold_t, &cfg.levels, cfg.coverage_mode)?;
    let holdout_coverage_after = empirical_coverage(&hold_scaled, &hold_t, &cfg.levels, cfg.coverage_mode)?;
    Ok(CalibrationReport {
        checkpoint: cfg.checkpoint.clone(),
        s: fit.s,
        levels: cfg.levels.clone(),
        coverage_mode: cfg.coverage_mode,
        seed: cfg.seed,
        fit_samples: fit_idx.len(),
        holdout_samples: hold_idx.len(),
        holdout_ce_before: calibration_error(&hold_d, &hold_t, &cfg.levels, cfg.coverage_mode)?,
        holdout_ce_after: calibration_error(&hold_scaled, &hold_t, &cfg.levels, cfg.coverage_mode)?,
        fit,
        holdout_coverage_before,
        holdout_coverage_after,
    })
}
