use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array4, Axis};
use rand::seq::SliceRandom;

use crate::dataset::{read_video, target_transform, DatasetManifest, NormalizationStats, Split};
use crate::{seed, Error, Result};

/// A decoded clip with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub sample_id: String,
    pub frames: Array4<u8>,
    pub omega_rpm: f64,
    pub class_id: u8,
    pub nu: f64,
}

impl Clip {
    pub fn target(&self, stats: &NormalizationStats) -> Result<f64> {
        target_transform(self.nu, stats)
    }

    /// One of the eight symmetries of the square frame: bit 0 mirrors the
    /// width axis, bit 1 the height axis, bit 2 swaps height and width
    /// (square frames only).
    pub fn transformed(&self, code: u8) -> Array4<u8> {
        let mut f = self.frames.view();
        if code & 1 != 0 {
            f.invert_axis(Axis(2));
        }
        if code & 2 != 0 {
            f.invert_axis(Axis(1));
        }
        let (_, h, w, _) = f.dim();
        if code & 4 != 0 && h == w {
            f.swap_axes(1, 2);
        }
        f.as_standard_layout().into_owned()
    }
}

/// Reads every video of one split, checking frame shapes against the
/// manifest's video config.
pub fn load_split(manifest_path: &Path, manifest: &DatasetManifest, split: Split) -> Result<Vec<Clip>> {
    let vc = manifest.video_config;
    let expected = (usize::from(vc.frames), usize::from(vc.height), usize::from(vc.width), 3);
    manifest
        .split(split)
        .map(|e| {
            let path = DatasetManifest::video_path(manifest_path, e);
            let (frames, _) = read_video(&path)?;
            if frames.dim() != expected {
                return Err(Error::Shape {
                    axis: "frames",
                    detail: format!(
                        "{} has {:?}, manifest says {:?}",
                        path.display(),
                        frames.dim(),
                        expected
                    ),
                });
            }
            Ok(Clip {
                sample_id: e.sample_id.clone(),
                frames,
                omega_rpm: e.omega_rpm,
                class_id: e.class_id,
                nu: e.nu,
            })
        })
        .collect()
}

/// Indices of a seeded, class-stratified share of `clips`: `round(n_c * f)`
/// per class, at least one. Returned in ascending order.
pub fn stratified_subset(clips: &[Clip], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Domain(format!("fraction {fraction} outside (0, 1]")));
    }
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, c) in clips.iter().enumerate() {
        by_class.entry(c.class_id).or_default().push(i);
    }
    let mut keep = Vec::new();
    for (class, mut idx) in by_class {
        let n = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len());
        idx.shuffle(&mut seed::rng(seed, &[0x5b5e7, u64::from(class)]));
        keep.extend_from_slice(&idx[..n]);
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Shuffled minibatches over `n` items; the last partial batch is filled by
/// wrapping around to the start of the permutation.
pub fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    if n == 0 || batch_size == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed, &[0xba7c, epoch as u64]));
    order
        .chunks(batch_size)
        .map(|c| {
            let mut b = c.to_vec();
            let mut k = 0;
            while b.len() < batch_size {
                b.push(order[k % n]);
                k += 1;
            }
            b
        })
        .collect()
}
