use serde::{Deserialize, Serialize};

use crate::dataset::VideoConfig;
use crate::{Error, Result};

/// Encoder layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderKind {
    /// One transformer over all space-time tokens.
    Joint,
    /// A spatial transformer per time slice, then a temporal transformer
    /// over the per-slice means.
    Factorized { temporal_depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Mean,
    ClassToken,
}

/// Pixel preprocessing ahead of the tubelet projection. Both are linear
/// in the input, so an all-zero clip maps to all-zero patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputNorm {
    /// `v / 255`.
    Unit,
    /// `4 (v - mean_t v) / 255`: each pixel minus its own mean over the
    /// clip, which removes the static background and keeps its motion.
    #[default]
    TemporalCentered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `(T, H, W)` of the input clips.
    pub input: [usize; 3],
    /// `(t_t, t_h, t_w)`
    pub tubelet: [usize; 3],
    pub embed_dim: usize,
    pub depth: usize,
    pub heads: usize,
    pub mlp_ratio: f64,
    pub num_classes: usize,
    /// Mixture components.
    pub k: usize,
    /// rpm mapped to `[0, 1]` before the conditioning projection.
    pub omega_range: [f64; 2],
    pub sigma_floor: f64,
    pub encoder: EncoderKind,
    pub pooling: Pooling,
    #[serde(default)]
    pub input_norm: InputNorm,
    /// Weight initialization seed.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ModelConfig {
    /// 64x64x16 clips, tubelet (4, 8, 8), width 128, depth 4, 4 heads.
    pub fn desk() -> Self {
        Self {
            input: [16, 64, 64],
            tubelet: [4, 8, 8],
            embed_dim: 128,
            depth: 4,
            heads: 4,
            mlp_ratio: 2.0,
            num_classes: 10,
            k: 3,
            omega_range: [270.0, 450.0],
            sigma_floor: 1e-3,
            encoder: EncoderKind::Joint,
            pooling: Pooling::Mean,
            input_norm: InputNorm::TemporalCentered,
            seed: 0,
        }
    }

    /// A smaller variant for quick experiments: the desk token grid at
    /// width 64 and depth 2.
    pub fn compact() -> Self {
        Self {
            embed_dim: 64,
            depth: 2,
            ..Self::desk()
        }
    }

    pub fn for_video(mut self, video: &VideoConfig) -> Self {
        self.input = [
            usize::from(video.frames),
            usize::from(video.height),
            usize::from(video.width),
        ];
        self
    }

    pub fn grid(&self) -> [usize; 3] {
        [
            self.input[0] / self.tubelet[0],
            self.input[1] / self.tubelet[1],
            self.input[2] / self.tubelet[2],
        ]
    }

    /// Content tokens, excluding any class token.
    pub fn num_patches(&self) -> usize {
        self.grid().iter().product()
    }

    pub fn num_tokens(&self) -> usize {
        self.num_patches() + usize::from(self.pooling == Pooling::ClassToken)
    }

    pub fn patch_dim(&self) -> usize {
        self.tubelet.iter().product::<usize>() * 3
    }

    pub fn mlp_hidden(&self) -> usize {
        ((self.embed_dim as f64 * self.mlp_ratio).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (axis, (n, t)) in ["T", "H", "W"].into_iter().zip(self.input.iter().zip(&self.tubelet)) {
            if *t == 0 || *n == 0 || n % t != 0 {
                return Err(Error::Shape {
                    axis,
                    detail: format!("tubelet size {t} does not divide input extent {n}"),
                });
            }
        }
        if self.embed_dim == 0 || self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return bad(format!(
                "embed_dim {} not divisible by heads {}",
                self.embed_dim, self.heads
            ));
        }
        if self.depth == 0 || !(self.mlp_ratio > 0.0) {
            return bad("depth and mlp_ratio must be positive".into());
        }
        if self.num_classes == 0 || self.k == 0 {
            return bad("num_classes and K must be at least 1".into());
        }
        if !(self.omega_range[1] > self.omega_range[0]) {
            return bad(format!("empty omega range {:?}", self.omega_range));
        }
        if !(self.sigma_floor > 0.0) {
            return bad(format!("sigma_floor must be positive, got {}", self.sigma_floor));
        }
        if let EncoderKind::Factorized { temporal_depth } = self.encoder {
            if temporal_depth == 0 {
                return bad("factorized encoder needs temporal_depth >= 1".into());
            }
            if self.pooling != Pooling::Mean {
                return bad("factorized encoder supports mean pooling only".into());
            }
        }
        Ok(())
    }
}
