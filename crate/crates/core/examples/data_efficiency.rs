//! Pretrains on one synthetic domain, then fine-tunes on a shifted domain at
//! several training fractions, from the pretrained weights and from scratch.
//!
//! `cargo run --release --example data_efficiency -- [out_dir] [pretrain_epochs] [finetune_epochs]`

use std::path::PathBuf;

use viscnet::synth::{generate_dataset, GenConfig};
use viscnet::train::{data_efficiency_sweep, train_from_manifest, StageData, SweepConfig, TrainConfig};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/data_efficiency".into()));
    let pre_epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let ft_epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);

    let source = GenConfig {
        repeats: 2,
        seed: 1,
        ..GenConfig::default()
    };
    generate_dataset(&source, &out.join("sim-a"), 1)?;
    generate_dataset(&source.shifted(), &out.join("sim-b"), 1)?;

    let pre = TrainConfig {
        epochs: pre_epochs,
        ..TrainConfig::default()
    };
    let (_, report) = train_from_manifest(&pre, &out.join("sim-a/manifest.jsonl"), &out.join("pretrain"))?;
    println!(
        "pretrained: val accuracy {:.3}",
        report.last().val_accuracy.unwrap_or(0.0)
    );

    let mut sweep = SweepConfig {
        pretrained_checkpoint: Some(report.best_checkpoint),
        ..SweepConfig::default()
    };
    sweep.train.epochs = ft_epochs;
    let data = StageData::from_manifest(&out.join("sim-b/manifest.jsonl"))?;
    let table = data_efficiency_sweep(&sweep, &data, &out.join("sweep"))?;
    for c in &table.summary {
        println!(
            "{:<10} fraction {:.2}: {:.3} +/- {:.3}",
            c.arm.as_str(),
            c.fraction,
            c.mean_accuracy,
            c.std_accuracy
        );
    }
    std::fs::write(out.join("sweep.csv"), table.to_csv())?;
    Ok(())
}
