//! Generates a desk-scale synthetic set, pretrains the classifier, then
//! trains the mixture head on top.
//!
//! `cargo run --release --example desk_training -- [out_dir] [epochs]`

use std::path::PathBuf;
use std::time::Instant;

use viscnet::synth::{generate_dataset, GenConfig};
use viscnet::train::{run_stage, train_from_manifest, Stage, StageData, TrainConfig};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/desk_training".into()));
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);

    let gen = GenConfig {
        repeats: 3,
        seed: 1,
        ..GenConfig::default()
    };
    let t = Instant::now();
    let manifest = generate_dataset(&gen, &out.join("data"), 1)?;
    println!(
        "generated {} clips in {:.1}s",
        manifest.entries.len(),
        t.elapsed().as_secs_f64()
    );

    let pre = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let manifest_path = out.join("data/manifest.jsonl");
    let (_, report) = train_from_manifest(&pre, &manifest_path, &out)?;
    println!(
        "pretrain: val accuracy {:.3} after {} epochs ({:.0}s)",
        report.last().val_accuracy.unwrap_or(0.0),
        epochs,
        report.wall_clock_s
    );

    let reg = TrainConfig {
        stage: Stage::Regress,
        init_checkpoint: Some(report.final_checkpoint.clone()),
        epochs: epochs / 2,
        ..TrainConfig::default()
    };
    let data = StageData::from_manifest(&manifest_path)?;
    let mut model = viscnet::train::init_model(&reg)?;
    let r = run_stage(&reg, &data, &mut model, &out)?;
    println!(
        "regress: val MAE {:.3} vs predict-the-mean {:.3}",
        r.last().val_mae.unwrap_or(f64::NAN),
        r.baseline_mae.unwrap_or(f64::NAN)
    );
    Ok(())
}
