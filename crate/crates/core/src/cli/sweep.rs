use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{load_config, require_file, resolve, write_json, write_text, CommandOutput, RunConfig};
use crate::train::{data_efficiency_sweep, multipattern_experiment, Arm, MultiPatternConfig, StageData, SweepConfig};
use crate::Result;

/// `sweep` command config, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum SweepCommand {
    /// Fine-tuning accuracy against training-data fraction.
    DataEfficiency {
        manifest: PathBuf,
        #[serde(default)]
        sweep: SweepConfig,
    },
    /// Mono- against multi-pattern retraining on the closest classes.
    MultiPattern {
        #[serde(default)]
        experiment: MultiPatternConfig,
    },
}

/// Runs a sweep; writes `sweep.json` and `sweep.csv`, or `multipattern.json`.
///
/// `--seed N` replaces the data-efficiency seeds with `N, N+1, ...` (same
/// count) and the multi-pattern generation and training seeds with `N`.
pub fn cmd_sweep(run: &RunConfig) -> Result<CommandOutput> {
    match load_config::<SweepCommand>(&run.config_path)? {
        SweepCommand::DataEfficiency { manifest, mut sweep } => {
            let manifest = resolve(&run.config_path, &manifest);
            sweep.pretrained_checkpoint = sweep.pretrained_checkpoint.map(|p| resolve(&run.config_path, &p));
            if let Some(s) = run.seed {
                sweep.seeds = (0..sweep.seeds.len() as u64).map(|i| s + i).collect();
            }
            sweep.validate()?;
            require_file(&manifest)?;
            if let Some(p) = &sweep.pretrained_checkpoint {
                require_file(p)?;
            }
            let data = StageData::from_manifest(&manifest)?;
            let table = data_efficiency_sweep(&sweep, &data, &run.output_dir.join("runs"))?;
            let lines = table
                .summary
                .iter()
                .map(|c| {
                    format!(
                        "{} fraction {}: accuracy {:.3} +/- {:.3} over {} runs",
                        c.arm.as_str(),
                        c.fraction,
                        c.mean_accuracy,
                        c.std_accuracy,
                        c.runs
                    )
                })
                .collect();
            let artifacts = vec![
                write_json(&run.output_dir.join("sweep.json"), &table)?,
                write_text(&run.output_dir.join("sweep.csv"), &table.to_csv())?,
            ];
            let smallest = sweep.fractions.iter().copied().fold(f64::INFINITY, f64::min);
            if let (Some(p), Some(s)) = (
                table.mean(Arm::Pretrained, smallest),
                table.mean(Arm::Scratch, smallest),
            ) {
                log::info!("fraction {smallest}: pretrained {p:.3} vs scratch {s:.3}");
            }
            Ok(CommandOutput { lines, artifacts })
        }
        SweepCommand::MultiPattern { mut experiment } => {
            if let Some(s) = run.seed {
                experiment.gen.seed = s;
                experiment.train.seed = s;
            }
            experiment.workers = run.workers;
            let report = multipattern_experiment(&experiment, &run.output_dir)?;
            let mut lines = vec![format!("classes {:?}", report.classes)];
            lines.extend(report.classes.iter().enumerate().map(|(i, c)| {
                format!(
                    "class {c}: mono {:.3}, multi {:.3}, delta {:+.3}",
                    report.mono.per_class_accuracy[i], report.multi.per_class_accuracy[i], report.delta_per_class[i]
                )
            }));
            lines.push(format!("mean delta {:+.3}", report.delta_mean));
            Ok(CommandOutput {
                lines,
                artifacts: vec![write_json(&run.output_dir.join("multipattern.json"), &report)?],
            })
        }
    }
}
