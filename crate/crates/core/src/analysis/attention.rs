use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::model::AttentionRecord;
use crate::{Error, Result};

pub const RADIAL_BINS: usize = 8;

/// Mean attention of the samples whose value fell in one quantile bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` when the bin is empty.
    pub mean: Option<AttentionRecord>,
}

/// Equal-count bin index per sample. Tied values share the bin of their
/// first sorted position, so identical inputs all land in bin 0.
pub fn quantile_bins(values: &[f64], bins: usize) -> Result<Vec<usize>> {
    let n = values.len();
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    if n < bins {
        return Err(Error::Domain(format!("{n} samples cannot fill {bins} bins")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite binning value".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; n];
    let mut first_rank = 0;
    for (rank, &i) in order.iter().enumerate() {
        if rank > 0 && values[i] != values[order[rank - 1]] {
            first_rank = rank;
        }
        out[i] = first_rank * bins / n;
    }
    Ok(out)
}

/// Per-bin element-wise mean of attention maps, renormalized.
pub fn bin_attention(records: &[AttentionRecord], values: &[f64], bins: usize) -> Result<Vec<AttentionBin>> {
    if records.len() != values.len() {
        return Err(Error::Shape {
            axis: "values",
            detail: format!("{} records vs {} values", records.len(), values.len()),
        });
    }
    let assign = quantile_bins(values, bins)?;
    let first = &records[0];
    if records
        .iter()
        .any(|r| r.spatial.dim() != first.spatial.dim() || r.temporal.len() != first.temporal.len())
    {
        return Err(Error::Shape {
            axis: "attention",
            detail: "records have differing grid shapes".into(),
        });
    }
    (0..bins)
        .map(|b| {
            let members: Vec<usize> = (0..records.len()).filter(|&i| assign[i] == b).collect();
            if members.is_empty() {
                return Ok(AttentionBin {
                    lower: f64::NAN,
                    upper: f64::NAN,
                    count: 0,
                    mean: None,
                });
            }
            let mut spatial = Array2::zeros(first.spatial.dim());
            let mut temporal = Array1::zeros(first.temporal.len());
            let (mut lower, mut upper) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &members {
                spatial += &records[i].spatial;
                temporal += &records[i].temporal;
                lower = lower.min(values[i]);
                upper = upper.max(values[i]);
            }
            Ok(AttentionBin {
                lower,
                upper,
                count: members.len(),
                mean: Some(AttentionRecord::normalized(spatial, temporal)?),
            })
        })
        .collect()
}

/// Share of spatial attention in each of 8 equal-width annuli from `center`
/// (grid coordinates) out to the farthest grid corner. Sums to 1.
pub fn radial_attention_profile(record: &AttentionRecord, center: (f64, f64)) -> Vec<f64> {
    let (h, w) = record.spatial.dim();
    let corners = [(0.0, 0.0), (0.0, w as f64), (h as f64, 0.0), (h as f64, w as f64)];
    let r_max = corners
        .iter()
        .map(|&(y, x)| (y - center.0).hypot(x - center.1))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut profile = vec![0.0; RADIAL_BINS];
    for ((i, j), &v) in record.spatial.indexed_iter() {
        let r = (i as f64 + 0.5 - center.0).hypot(j as f64 + 0.5 - center.1);
        let k = ((r / r_max * RADIAL_BINS as f64) as usize).min(RADIAL_BINS - 1);
        profile[k] += v;
    }
    let total: f64 = profile.iter().sum();
    if total > 0.0 {
        profile.iter_mut().for_each(|p| *p /= total);
    }
    profile
}

/// Grid centre for a record.
pub fn grid_center(record: &AttentionRecord) -> (f64, f64) {
    let (h, w) = record.spatial.dim();
    (h as f64 / 2.0, w as f64 / 2.0)
}

/// Mass-weighted mean annulus radius, as a fraction of the outer radius.
pub fn center_of_mass_radius(profile: &[f64]) -> f64 {
    let n = profile.len() as f64;
    profile.iter().enumerate().map(|(k, p)| p * (k as f64 + 0.5) / n).sum()
}

/// Spatial map as 8-bit grayscale, minimum black and maximum white, each
/// grid cell drawn as an `upscale`-pixel square.
pub fn attention_image(map: &Array2<f64>, upscale: u32) -> image::GrayImage {
    let (h, w) = map.dim();
    let up = upscale.max(1);
    let (lo, hi) = map
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let range = hi - lo;
    image::GrayImage::from_fn(w as u32 * up, h as u32 * up, |x, y| {
        let v = map[[(y / up) as usize, (x / up) as usize]];
        let t = if range > 0.0 { (v - lo) / range } else { 0.0 };
        image::Luma([(t * 255.0).round() as u8])
    })
}

pub fn save_attention_png(map: &Array2<f64>, upscale: u32, path: &Path) -> Result<()> {
    attention_image(map, upscale)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Plot(format!("{}: {e}", path.display())))
}
