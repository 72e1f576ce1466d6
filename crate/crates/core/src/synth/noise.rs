use ndarray::{Array, ArrayBase, Data, Dimension};
use rand_distr::{Distribution, Normal};

use crate::{seed, Error, Result};

/// Adds seeded Gaussian intensity noise of std `noise_level`, clamped to
/// `[0, 255]` and rounded.
pub fn inject_noise<S, D>(image: &ArrayBase<S, D>, noise_level: f64, seed: u64) -> Result<Array<u8, D>>
where
    S: Data<Elem = u8>,
    D: Dimension,
{
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::Domain(format!(
            "noise level must be non-negative, got {noise_level}"
        )));
    }
    if noise_level == 0.0 {
        return Ok(image.to_owned());
    }
    let normal = Normal::new(0.0, noise_level).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = seed::rng(seed, &[0x4015e]);
    let mut out = image.to_owned();
    for v in out.iter_mut() {
        let x = f64::from(*v) + normal.sample(&mut rng);
        *v = x.clamp(0.0, 255.0).round() as u8;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn zero_level_is_identity() {
        let img = Array3::from_shape_fn((8, 8, 3), |(i, j, c)| (i * 31 + j * 7 + c) as u8);
        assert_eq!(inject_noise(&img, 0.0, 3).unwrap(), img);
    }

    #[test]
    fn empirical_std_matches_level() {
        let img = Array3::from_elem((200, 200, 3), 128u8);
        for level in [2.0, 5.0, 12.0] {
            let noisy = inject_noise(&img, level, 11).unwrap();
            let n = noisy.len() as f64;
            let diffs: Vec<f64> = noisy.iter().map(|&v| f64::from(v) - 128.0).collect();
            let mean = diffs.iter().sum::<f64>() / n;
            let std = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
            // rounding to integers adds variance 1/12
            let want = (level * level + 1.0 / 12.0).sqrt();
            assert!((std - want).abs() / level < 0.05, "{level}: {std}");
        }
    }

    #[test]
    fn seeded_and_clamped() {
        let img = Array3::from_shape_fn((16, 16, 3), |(i, _, _)| if i % 2 == 0 { 0u8 } else { 255 });
        let a = inject_noise(&img, 30.0, 9).unwrap();
        assert_eq!(a, inject_noise(&img, 30.0, 9).unwrap());
        assert_ne!(a, inject_noise(&img, 30.0, 10).unwrap());
        assert!(inject_noise(&img, -1.0, 1).is_err());
    }
}
