use std::collections::BTreeMap;

use super::{load_config, write_json, CommandOutput, RunConfig};
use crate::synth::{generate_dataset, GenConfig};
use crate::Result;

/// Renders the configured dataset into the output directory.
pub fn cmd_gen(run: &RunConfig) -> Result<CommandOutput> {
    let mut config: GenConfig = load_config(&run.config_path)?;
    if let Some(s) = run.seed {
        config.seed = s;
    }
    config.validate()?;
    let manifest = generate_dataset(&config, &run.output_dir, run.workers)?;

    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for e in &manifest.entries {
        *counts.entry(e.class_id).or_default() += 1;
    }
    let mut lines = vec![format!("{} samples", manifest.entries.len())];
    lines.extend(counts.iter().map(|(c, n)| format!("class {c}: {n}")));
    let effective = write_json(&run.output_dir.join("gen-config.json"), &config)?;
    Ok(CommandOutput {
        lines,
        artifacts: vec![run.output_dir.join("manifest.jsonl"), effective],
    })
}
