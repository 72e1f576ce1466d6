use ndarray::{s, Array3};
use rand::Rng;

use crate::dataset::{BasePattern, PatternId};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Noise,
    Checkerboard,
    Multi,
}

/// A background image placed under the container, `[H_p, W_p, 3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundPattern {
    pub pixels: Array3<u8>,
    pub kind: PatternKind,
    /// Noise cell or checker cell size in pixels; for composites, the
    /// right (coarse) half's scale.
    pub scale: u32,
}

impl BackgroundPattern {
    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }
}

fn check_size(scale: usize, (h, w): (usize, usize)) -> Result<()> {
    if scale == 0 {
        return Err(Error::Domain("pattern scale must be at least 1".into()));
    }
    if h == 0 || w == 0 {
        return Err(Error::Domain(format!("empty pattern size {h}x{w}")));
    }
    if scale > h.min(w) {
        return Err(Error::Domain(format!("scale {scale} exceeds pattern size {h}x{w}")));
    }
    Ok(())
}

/// Grayscale white noise, one uniform intensity per `scale x scale` cell.
pub fn make_noise_pattern(scale: usize, size: (usize, usize), seed: u64) -> Result<BackgroundPattern> {
    check_size(scale, size)?;
    let (h, w) = size;
    let (ch, cw) = (h.div_ceil(scale), w.div_ceil(scale));
    let mut rng = seed::rng(seed, &[0x9a77e5, scale as u64]);
    let cells: Vec<u8> = (0..ch * cw).map(|_| rng.random::<u8>()).collect();
    let pixels = Array3::from_shape_fn((h, w, 3), |(y, x, _)| cells[(y / scale) * cw + x / scale]);
    Ok(BackgroundPattern {
        pixels,
        kind: PatternKind::Noise,
        scale: scale as u32,
    })
}

/// Alternating white/black cells with white at the origin.
pub fn make_checkerboard(cell: usize, size: (usize, usize)) -> Result<BackgroundPattern> {
    check_size(cell, size)?;
    let (h, w) = size;
    if h % cell != 0 || w % cell != 0 {
        return Err(Error::Domain(format!("checker cell {cell} does not divide {h}x{w}")));
    }
    let pixels = Array3::from_shape_fn((h, w, 3), |(y, x, _)| {
        if (y / cell + x / cell).is_multiple_of(2) {
            255
        } else {
            0
        }
    });
    Ok(BackgroundPattern {
        pixels,
        kind: PatternKind::Checkerboard,
        scale: cell as u32,
    })
}

/// Places `left` and `right` side by side. The right half must be the
/// coarser pattern.
pub fn compose_multipattern(left: &BackgroundPattern, right: &BackgroundPattern) -> Result<BackgroundPattern> {
    if left.height() != right.height() {
        return Err(Error::Shape {
            axis: "height",
            detail: format!("left {} vs right {}", left.height(), right.height()),
        });
    }
    if right.scale < left.scale {
        return Err(Error::Domain(format!(
            "coarse pattern must be on the right (left scale {}, right scale {})",
            left.scale, right.scale
        )));
    }
    let (h, wl, wr) = (left.height(), left.width(), right.width());
    let mut pixels = Array3::zeros((h, wl + wr, 3));
    pixels.slice_mut(s![.., ..wl, ..]).assign(&left.pixels);
    pixels.slice_mut(s![.., wl.., ..]).assign(&right.pixels);
    Ok(BackgroundPattern {
        pixels,
        kind: PatternKind::Multi,
        scale: right.scale,
    })
}

/// Seeded random pattern family: noise or checkerboard at a random scale.
pub fn make_procedural_pattern(index: u16, size: (usize, usize), seed: u64) -> Result<BackgroundPattern> {
    let mut rng = seed::rng(seed, &[0x960c, u64::from(index)]);
    let scales = [1usize, 2, 3, 4, 6, 8, 12, 16];
    let max = size.0.min(size.1);
    if rng.random_bool(0.7) {
        let choices: Vec<usize> = scales.iter().copied().filter(|&s| s <= max).collect();
        let scale = choices[rng.random_range(0..choices.len())];
        make_noise_pattern(scale, size, rng.random())
    } else {
        let choices: Vec<usize> = scales
            .iter()
            .copied()
            .filter(|&s| s <= max && size.0.is_multiple_of(s) && size.1.is_multiple_of(s))
            .collect();
        let cell = choices[rng.random_range(0..choices.len())];
        make_checkerboard(cell, size)
    }
}

fn base_pattern(
    p: BasePattern,
    size: (usize, usize),
    noise_base_cell: usize,
    checker_cell: usize,
    seed: u64,
) -> Result<BackgroundPattern> {
    match p {
        BasePattern::Noise(level) => {
            let scale = noise_base_cell << (level.saturating_sub(1));
            make_noise_pattern(scale, size, seed::derive(seed, &[u64::from(level)]))
        }
        BasePattern::Checkerboard => make_checkerboard(checker_cell, size),
        BasePattern::Procedural(k) => make_procedural_pattern(k, size, seed),
    }
}

/// Builds the pattern named by `id`. Composites split the width in two
/// equal halves.
pub fn pattern_for_id(
    id: PatternId,
    size: (usize, usize),
    noise_base_cell: usize,
    checker_cell: usize,
    seed: u64,
) -> Result<BackgroundPattern> {
    match id {
        PatternId::Single(p) => base_pattern(p, size, noise_base_cell, checker_cell, seed),
        PatternId::Multi { left, right } => {
            if !size.1.is_multiple_of(2) {
                return Err(Error::Domain(format!("composite width {} must be even", size.1)));
            }
            let half = (size.0, size.1 / 2);
            let l = base_pattern(left, half, noise_base_cell, checker_cell, seed)?;
            let r = base_pattern(right, half, noise_base_cell, checker_cell, seed)?;
            compose_multipattern(&l, &r)
        }
    }
}
