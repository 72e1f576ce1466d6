//! Generates a small labelled synthetic set and summarizes its manifest.
//!
//! `cargo run --release --example generate_dataset -- [out_dir] [workers]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use viscnet::dataset::{load_manifest, Split};
use viscnet::synth::{generate_dataset, GenConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/generate_dataset".into()));
    let workers: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let config = GenConfig::default();
    println!("{} clips planned", config.sample_count()?);
    generate_dataset(&config, &out, workers)?;

    let manifest = load_manifest(&out.join("manifest.jsonl"))?;
    let mut per_class: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    for e in &manifest.entries {
        let c = per_class.entry(e.class_id).or_default();
        match e.split {
            Split::Train => c.0 += 1,
            _ => c.1 += 1,
        }
    }
    for (class, (train, val)) in per_class {
        println!("class {class}: {train} train, {val} val");
    }
    println!(
        "log10 nu: mean {:.3}, std {:.3}",
        manifest.norm_stats.mean_logv, manifest.norm_stats.std_logv
    );
    Ok(())
}
