use ndarray::{s, Array1, Array2, ArrayView4, Axis};

use super::{AttentionRecord, EncoderKind, InputNorm, MixtureParams, ModelConfig, Pooling};
use crate::nn::{join, Block, BlockCache, LayerNorm, Linear, LnCache, Module, Param};
use crate::{seed, Error, Result};

#[cfg(test)]
#[path = "net_tests.rs"]
mod tests;

/// Embedded tokens ready for the encoder, `[N_tok, embed_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub tokens: Array2<f32>,
    /// Row 0 is a class token.
    pub class_token: bool,
    /// The conditioning speed lay outside the configured range.
    pub omega_extrapolated: bool,
}

/// Outputs of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub logits: Array1<f32>,
    /// `[3K]`: weight logits, means, std pre-activations.
    pub gmm_raw: Array1<f32>,
    pub features: Array1<f32>,
    pub attention: AttentionRecord,
}

#[derive(Debug, Clone)]
enum EncodeTape {
    Joint {
        blocks: Vec<BlockCache>,
        norm: LnCache,
        tokens: usize,
    },
    Factorized {
        slices: Vec<Vec<BlockCache>>,
        temporal: Vec<BlockCache>,
        norm: LnCache,
    },
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    patches: Array2<f32>,
    omega_in: Array2<f32>,
    encode: EncodeTape,
    features: Array2<f32>,
}

/// The video transformer with classification and mixture-density heads.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscNet {
    pub config: ModelConfig,
    pub patch: Linear,
    /// Joint: one row per token; factorized: one row per spatial cell.
    pub pos: Param,
    /// Factorized only: one row per time slice.
    pub pos_time: Option<Param>,
    pub omega: Linear,
    pub cls: Option<Param>,
    pub blocks: Vec<Block>,
    pub temporal_blocks: Vec<Block>,
    pub norm: LayerNorm,
    pub class_head: Linear,
    pub gmm_head: Linear,
}

impl ViscNet {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::rng(config.seed, &[0x1417]);
        let d = config.embed_dim;
        let [gt, gh, gw] = config.grid();
        let factorized = matches!(config.encoder, EncoderKind::Factorized { .. });
        let pos_rows = if factorized { gh * gw } else { gt * gh * gw };
        let patch = Linear::new(config.patch_dim(), d, &mut rng);
        let pos = Param::normal(pos_rows, d, 0.02, &mut rng);
        let pos_time = factorized.then(|| Param::normal(gt, d, 0.02, &mut rng));
        let omega = Linear::new(1, d, &mut rng);
        let cls = (config.pooling == Pooling::ClassToken).then(|| Param::normal(1, d, 0.02, &mut rng));
        let blocks = (0..config.depth)
            .map(|_| Block::new(d, config.heads, config.mlp_hidden(), &mut rng))
            .collect();
        let temporal_blocks = match config.encoder {
            EncoderKind::Factorized { temporal_depth } => (0..temporal_depth)
                .map(|_| Block::new(d, config.heads, config.mlp_hidden(), &mut rng))
                .collect(),
            EncoderKind::Joint => Vec::new(),
        };
        Ok(Self {
            config,
            patch,
            pos,
            pos_time,
            omega,
            cls,
            blocks,
            temporal_blocks,
            norm: LayerNorm::new(d),
            class_head: Linear::new(d, config.num_classes, &mut rng),
            gmm_head: Linear::new(d, 3 * config.k, &mut rng),
        })
    }

    /// Flattens non-overlapping tubelets into rows, t-major then h then w,
    /// after the configured input normalization.
    fn patches(&self, frames: ArrayView4<u8>) -> Result<Array2<f32>> {
        let c = &self.config;
        let (t, h, w, ch) = frames.dim();
        if ch != 3 {
            return Err(Error::Shape {
                axis: "channels",
                detail: format!("expected 3 channels, got {ch}"),
            });
        }
        for (axis, got, want, tube) in [
            ("T", t, c.input[0], c.tubelet[0]),
            ("H", h, c.input[1], c.tubelet[1]),
            ("W", w, c.input[2], c.tubelet[2]),
        ] {
            if got % tube != 0 {
                return Err(Error::Shape {
                    axis,
                    detail: format!("tubelet size {tube} does not divide {got}"),
                });
            }
            if got != want {
                return Err(Error::Shape {
                    axis,
                    detail: format!("model expects {want}, got {got}"),
                });
            }
        }
        let [tt, th, tw] = c.tubelet;
        let [gt, gh, gw] = c.grid();
        let x = frames.mapv(|v| f32::from(v) / 255.0);
        let x = match c.input_norm {
            InputNorm::Unit => x,
            InputNorm::TemporalCentered => (&x - &x.mean_axis(Axis(0)).expect("non-empty clip")) * 4.0,
        };
        let mut out = Array2::zeros((gt * gh * gw, c.patch_dim()));
        for (row, mut dst) in out.rows_mut().into_iter().enumerate() {
            let (it, rest) = (row / (gh * gw), row % (gh * gw));
            let (ih, iw) = (rest / gw, rest % gw);
            let block = x.slice(s![
                it * tt..(it + 1) * tt,
                ih * th..(ih + 1) * th,
                iw * tw..(iw + 1) * tw,
                ..
            ]);
            dst.iter_mut().zip(block.iter()).for_each(|(d, v)| *d = *v);
        }
        Ok(out)
    }

    fn content_tokens(&self, patches: &Array2<f32>) -> Array2<f32> {
        let mut x = self.patch.forward(patches);
        let rows = self.pos.value.nrows();
        for (i, mut r) in x.rows_mut().into_iter().enumerate() {
            r += &self.pos.value.row(i % rows);
        }
        x
    }

    fn omega_input(&self, omega_rpm: f64) -> (Array2<f32>, bool) {
        let [lo, hi] = self.config.omega_range;
        let z = (omega_rpm - lo) / (hi - lo);
        (Array2::from_elem((1, 1), z as f32), !(0.0..=1.0).contains(&z))
    }

    /// Projects each tubelet and adds its positional embedding.
    pub fn tubelet_embed(&self, frames: ArrayView4<u8>) -> Result<TokenSequence> {
        let content = self.content_tokens(&self.patches(frames)?);
        let tokens = match &self.cls {
            Some(cls) => ndarray::concatenate(Axis(0), &[cls.value.view(), content.view()]).expect("same width"),
            None => content,
        };
        Ok(TokenSequence {
            tokens,
            class_token: self.cls.is_some(),
            omega_extrapolated: false,
        })
    }

    /// Adds the projected, range-normalized rotation speed to every token.
    pub fn condition_embed(&self, tokens: &TokenSequence, omega_rpm: f64) -> TokenSequence {
        let (inp, extrapolated) = self.omega_input(omega_rpm);
        let e = self.omega.forward(&inp);
        if extrapolated {
            log::debug!(
                "omega {omega_rpm} rpm outside {:?}, extrapolating",
                self.config.omega_range
            );
        }
        TokenSequence {
            tokens: &tokens.tokens + &e,
            class_token: tokens.class_token,
            omega_extrapolated: extrapolated || tokens.omega_extrapolated,
        }
    }

    /// Key-wise attention mass: mean over queries of each key's column.
    fn key_mass(a: &Array2<f32>, skip: usize) -> Array1<f64> {
        let n = a.nrows() as f64;
        a.slice(s![.., skip..]).sum_axis(Axis(0)).mapv(|v| f64::from(v) / n)
    }

    fn encode_tape(&self, x0: &Array2<f32>) -> Result<(Array1<f32>, AttentionRecord, EncodeTape)> {
        let [gt, gh, gw] = self.config.grid();
        let s_cells = gh * gw;
        match self.config.encoder {
            EncoderKind::Joint => {
                let mut x = x0.clone();
                let mut caches = Vec::with_capacity(self.blocks.len());
                for b in &self.blocks {
                    let (y, c) = b.forward(&x);
                    caches.push(c);
                    x = y;
                }
                let (z, norm) = self.norm.forward(&x);
                let features = match self.config.pooling {
                    Pooling::Mean => z.mean_axis(Axis(0)).expect("non-empty"),
                    Pooling::ClassToken => z.row(0).to_owned(),
                };
                let a = caches.last().expect("depth >= 1").attn.mean_probs();
                let mass = match self.config.pooling {
                    Pooling::Mean => Self::key_mass(&a, 0),
                    Pooling::ClassToken => a.slice(s![0, 1..]).mapv(f64::from),
                };
                let grid = mass.into_shape_with_order((gt, gh, gw)).expect("token grid");
                let spatial = grid.sum_axis(Axis(0));
                let temporal = grid.sum_axis(Axis(2)).sum_axis(Axis(1));
                let attention = AttentionRecord::normalized(spatial, temporal)?;
                Ok((
                    features,
                    attention,
                    EncodeTape::Joint {
                        blocks: caches,
                        norm,
                        tokens: x0.nrows(),
                    },
                ))
            }
            EncoderKind::Factorized { .. } => {
                let d = self.config.embed_dim;
                let mut slices = Vec::with_capacity(gt);
                let mut pooled = Array2::zeros((gt, d));
                let mut spatial = Array1::<f64>::zeros(s_cells);
                for t in 0..gt {
                    let mut x = x0.slice(s![t * s_cells..(t + 1) * s_cells, ..]).to_owned();
                    let mut caches = Vec::with_capacity(self.blocks.len());
                    for b in &self.blocks {
                        let (y, c) = b.forward(&x);
                        caches.push(c);
                        x = y;
                    }
                    spatial += &Self::key_mass(&caches.last().expect("depth >= 1").attn.mean_probs(), 0);
                    pooled.row_mut(t).assign(&x.mean_axis(Axis(0)).expect("non-empty"));
                    slices.push(caches);
                }
                let mut x = pooled + &self.pos_time.as_ref().expect("factorized").value;
                let mut temporal = Vec::with_capacity(self.temporal_blocks.len());
                for b in &self.temporal_blocks {
                    let (y, c) = b.forward(&x);
                    temporal.push(c);
                    x = y;
                }
                let (z, norm) = self.norm.forward(&x);
                let features = z.mean_axis(Axis(0)).expect("non-empty");
                let tmass = Self::key_mass(&temporal.last().expect("temporal_depth >= 1").attn.mean_probs(), 0);
                let attention =
                    AttentionRecord::normalized(spatial.into_shape_with_order((gh, gw)).expect("grid"), tmass)?;
                Ok((features, attention, EncodeTape::Factorized { slices, temporal, norm }))
            }
        }
    }

    /// Transformer stack, pooling and attention extraction.
    pub fn encode(&self, tokens: &TokenSequence) -> Result<(Array1<f32>, AttentionRecord)> {
        if tokens.tokens.dim() != (self.config.num_tokens(), self.config.embed_dim) {
            return Err(Error::Shape {
                axis: "tokens",
                detail: format!(
                    "expected {:?}, got {:?}",
                    (self.config.num_tokens(), self.config.embed_dim),
                    tokens.tokens.dim()
                ),
            });
        }
        let (f, a, _) = self.encode_tape(&tokens.tokens)?;
        Ok((f, a))
    }

    pub fn classify_head(&self, features: &Array1<f32>) -> Array1<f32> {
        self.class_head
            .forward(&features.view().insert_axis(Axis(0)).to_owned())
            .row(0)
            .to_owned()
    }

    fn gmm_raw(&self, features: &Array1<f32>) -> Array1<f32> {
        self.gmm_head
            .forward(&features.view().insert_axis(Axis(0)).to_owned())
            .row(0)
            .to_owned()
    }

    /// Mixture from the raw head outputs.
    pub fn mixture(&self, gmm_raw: &Array1<f32>) -> Result<MixtureParams> {
        let k = self.config.k;
        let raw: Vec<f64> = gmm_raw.iter().map(|&v| f64::from(v)).collect();
        MixtureParams::from_raw(&raw[..k], &raw[k..2 * k], &raw[2 * k..], self.config.sigma_floor)
    }

    pub fn gmm_head(&self, features: &Array1<f32>) -> Result<MixtureParams> {
        self.mixture(&self.gmm_raw(features))
    }

    fn forward_inner(&self, frames: ArrayView4<u8>, omega_rpm: f64) -> Result<(Forward, Tape)> {
        let patches = self.patches(frames)?;
        let (omega_in, _) = self.omega_input(omega_rpm);
        let e = self.omega.forward(&omega_in);
        let mut content = self.content_tokens(&patches);
        content += &e;
        let x0 = match &self.cls {
            Some(cls) => {
                let c = &cls.value + &e;
                ndarray::concatenate(Axis(0), &[c.view(), content.view()]).expect("same width")
            }
            None => content,
        };
        let (features, attention, encode) = self.encode_tape(&x0)?;
        let logits = self.classify_head(&features);
        let gmm_raw = self.gmm_raw(&features);
        let tape = Tape {
            patches,
            omega_in,
            encode,
            features: features.clone().insert_axis(Axis(0)),
        };
        Ok((
            Forward {
                logits,
                gmm_raw,
                features,
                attention,
            },
            tape,
        ))
    }

    /// Inference on one clip `[T, H, W, 3]`.
    pub fn forward(&self, frames: ArrayView4<u8>, omega_rpm: f64) -> Result<Forward> {
        Ok(self.forward_inner(frames, omega_rpm)?.0)
    }

    /// Forward pass keeping what [`ViscNet::backward`] needs.
    pub fn forward_train(&self, frames: ArrayView4<u8>, omega_rpm: f64) -> Result<(Forward, Tape)> {
        self.forward_inner(frames, omega_rpm)
    }

    /// Accumulates parameter gradients given loss gradients with respect to
    /// the logits and/or the raw mixture outputs.
    pub fn backward(&mut self, tape: &Tape, dlogits: Option<&Array1<f32>>, dgmm: Option<&Array1<f32>>) {
        let d = self.config.embed_dim;
        let mut dfeat = Array2::zeros((1, d));
        if let Some(g) = dlogits {
            dfeat += &self
                .class_head
                .backward(&tape.features, &g.view().insert_axis(Axis(0)).to_owned());
        }
        if let Some(g) = dgmm {
            dfeat += &self
                .gmm_head
                .backward(&tape.features, &g.view().insert_axis(Axis(0)).to_owned());
        }
        let dfeat = dfeat.row(0).to_owned();
        let [gt, gh, gw] = self.config.grid();
        let s_cells = gh * gw;

        let dx0 = match &tape.encode {
            EncodeTape::Joint { blocks, norm, tokens } => {
                let mut dz = Array2::zeros((*tokens, d));
                match self.config.pooling {
                    Pooling::Mean => {
                        let share = &dfeat / *tokens as f32;
                        dz.rows_mut().into_iter().for_each(|mut r| r.assign(&share));
                    }
                    Pooling::ClassToken => dz.row_mut(0).assign(&dfeat),
                }
                let mut dx = self.norm.backward(norm, &dz);
                for (b, c) in self.blocks.iter_mut().zip(blocks).rev() {
                    dx = b.backward(c, &dx);
                }
                dx
            }
            EncodeTape::Factorized { slices, temporal, norm } => {
                let share = &dfeat / gt as f32;
                let mut dz = Array2::zeros((gt, d));
                dz.rows_mut().into_iter().for_each(|mut r| r.assign(&share));
                let mut dm = self.norm.backward(norm, &dz);
                for (b, c) in self.temporal_blocks.iter_mut().zip(temporal).rev() {
                    dm = b.backward(c, &dm);
                }
                self.pos_time.as_mut().expect("factorized").grad += &dm;
                let mut dx0 = Array2::zeros((gt * s_cells, d));
                for (t, caches) in slices.iter().enumerate() {
                    let share = &dm.row(t) / s_cells as f32;
                    let mut dx = Array2::zeros((s_cells, d));
                    dx.rows_mut().into_iter().for_each(|mut r| r.assign(&share));
                    for (b, c) in self.blocks.iter_mut().zip(caches).rev() {
                        dx = b.backward(c, &dx);
                    }
                    dx0.slice_mut(s![t * s_cells..(t + 1) * s_cells, ..]).assign(&dx);
                }
                dx0
            }
        };

        let domega = dx0.sum_axis(Axis(0)).insert_axis(Axis(0));
        self.omega.backward(&tape.omega_in, &domega);
        let dcontent = match &mut self.cls {
            Some(cls) => {
                cls.grad += &dx0.slice(s![0..1, ..]);
                dx0.slice(s![1.., ..]).to_owned()
            }
            None => dx0,
        };
        let rows = self.pos.value.nrows();
        for (i, r) in dcontent.rows().into_iter().enumerate() {
            let mut g = self.pos.grad.row_mut(i % rows);
            g += &r;
        }
        self.patch.backward(&tape.patches, &dcontent);
    }
}

impl Module for ViscNet {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        self.patch.visit(&join(prefix, "patch"), f);
        f(&join(prefix, "pos"), &self.pos);
        if let Some(p) = &self.pos_time {
            f(&join(prefix, "pos_time"), p);
        }
        self.omega.visit(&join(prefix, "omega"), f);
        if let Some(p) = &self.cls {
            f(&join(prefix, "cls"), p);
        }
        for (i, b) in self.blocks.iter().enumerate() {
            b.visit(&join(prefix, &format!("blocks.{i}")), f);
        }
        for (i, b) in self.temporal_blocks.iter().enumerate() {
            b.visit(&join(prefix, &format!("temporal_blocks.{i}")), f);
        }
        self.norm.visit(&join(prefix, "norm"), f);
        self.class_head.visit(&join(prefix, "class_head"), f);
        self.gmm_head.visit(&join(prefix, "gmm_head"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.patch.visit_mut(&join(prefix, "patch"), f);
        f(&join(prefix, "pos"), &mut self.pos);
        if let Some(p) = &mut self.pos_time {
            f(&join(prefix, "pos_time"), p);
        }
        self.omega.visit_mut(&join(prefix, "omega"), f);
        if let Some(p) = &mut self.cls {
            f(&join(prefix, "cls"), p);
        }
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.visit_mut(&join(prefix, &format!("blocks.{i}")), f);
        }
        for (i, b) in self.temporal_blocks.iter_mut().enumerate() {
            b.visit_mut(&join(prefix, &format!("temporal_blocks.{i}")), f);
        }
        self.norm.visit_mut(&join(prefix, "norm"), f);
        self.class_head.visit_mut(&join(prefix, "class_head"), f);
        self.gmm_head.visit_mut(&join(prefix, "gmm_head"), f);
    }
}
