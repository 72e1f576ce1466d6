use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{DatasetManifest, Split};
use crate::{seed, Error, Result};

/// Assigns train/val labels by a seeded shuffle stratified by class.
///
/// Each class contributes `floor(n_c * f)` training samples; the remaining
/// `round(N * f) - sum floor(...)` training slots go to the classes with the
/// largest fractional remainder, ties resolved in a seeded random order.
/// Entry order is preserved and norm stats are recomputed from the new
/// training split.
pub fn split_dataset(manifest: &DatasetManifest, train_fraction: f64, seed: u64) -> Result<DatasetManifest> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    if manifest.entries.is_empty() {
        return Err(Error::InvalidManifest("cannot split an empty manifest".into()));
    }

    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        by_class.entry(e.class_id).or_default().push(i);
    }

    let total = manifest.entries.len();
    let target = (total as f64 * train_fraction).round() as usize;
    let mut quota: BTreeMap<u8, usize> = BTreeMap::new();
    let mut remainders: Vec<(u8, f64)> = Vec::new();
    for (&c, idx) in &by_class {
        let exact = idx.len() as f64 * train_fraction;
        quota.insert(c, exact.floor() as usize);
        remainders.push((c, exact - exact.floor()));
    }
    let assigned: usize = quota.values().sum();
    let mut extra = target.saturating_sub(assigned);

    let mut rng = seed::rng(seed, &[0x5111_7000]);
    remainders.shuffle(&mut rng);
    // stable sort keeps the shuffled order among equal remainders
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (c, r) in remainders {
        if extra == 0 {
            break;
        }
        let n_c = by_class[&c].len();
        let q = quota.get_mut(&c).expect("class present");
        if r > 0.0 && *q < n_c {
            *q += 1;
            extra -= 1;
        }
    }

    let mut out = manifest.clone();
    for (&c, idx) in &by_class {
        let mut idx = idx.clone();
        idx.shuffle(&mut seed::rng(seed, &[u64::from(c)]));
        for (rank, &i) in idx.iter().enumerate() {
            out.entries[i].split = if rank < quota[&c] { Split::Train } else { Split::Val };
        }
    }
    out.recompute_norm_stats()?;
    Ok(out)
}
