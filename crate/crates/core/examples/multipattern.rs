//! Retrains the classifier on the three closest classes with single and with
//! side-by-side background patterns and prints the per-class change.
//!
//! `cargo run --release --example multipattern -- [out_dir] [epochs]`

use std::path::PathBuf;

use viscnet::train::{multipattern_experiment, MultiPatternConfig};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/multipattern".into()));
    let mut config = MultiPatternConfig::default();
    if let Some(e) = args.next() {
        config.train.epochs = e.parse()?;
    }
    let report = multipattern_experiment(&config, &out)?;
    for (i, c) in report.classes.iter().enumerate() {
        println!(
            "class {c} (D = {:.3e}): mono {:.3}, multi {:.3}, delta {:+.3}",
            report.proximity[i],
            report.mono.per_class_accuracy[i],
            report.multi.per_class_accuracy[i],
            report.delta_per_class[i]
        );
    }
    println!("mean delta {:+.3}", report.delta_mean);
    std::fs::write(out.join("multipattern.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(())
}
