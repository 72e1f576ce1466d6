use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{load_config, require_file, resolve, write_json, CommandOutput, RunConfig};
use crate::train::{train_from_manifest, TrainConfig};
use crate::Result;

/// `train` command config: the dataset plus the stage settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub manifest: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
}

/// Runs one curriculum stage; writes checkpoints and `{stage}-report.json`.
pub fn cmd_train(run: &RunConfig) -> Result<CommandOutput> {
    let cfg: TrainRunConfig = load_config(&run.config_path)?;
    let manifest = resolve(&run.config_path, &cfg.manifest);
    let mut train = cfg.train;
    train.init_checkpoint = train.init_checkpoint.map(|p| resolve(&run.config_path, &p));
    if let Some(s) = run.seed {
        train.seed = s;
    }
    train.validate()?;
    require_file(&manifest)?;
    if let Some(p) = &train.init_checkpoint {
        require_file(p)?;
    }

    let (_, report) = train_from_manifest(&train, &manifest, &run.output_dir)?;
    let report_path = write_json(&run.output_dir.join(format!("{}-report.json", train.stage)), &report)?;
    let last = report.last();
    let mut lines = vec![format!(
        "{}: {} epochs, train loss {:.4}, best epoch {}",
        report.stage, report.epochs, last.train_loss, report.best_epoch
    )];
    if let Some(a) = last.val_accuracy {
        lines.push(format!("val accuracy {a:.3}"));
    }
    if let (Some(m), Some(b)) = (last.val_mae, report.baseline_mae) {
        lines.push(format!("val mae {m:.4} (mean-predictor baseline {b:.4})"));
    }
    Ok(CommandOutput {
        lines,
        artifacts: vec![report.best_checkpoint, report.final_checkpoint, report_path],
    })
}
