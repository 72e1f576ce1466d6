use ndarray::Array2;
use rand::Rng;

use super::{gelu, gelu_grad, join, AttnCache, LayerNorm, Linear, LnCache, Module, MultiHeadAttention, Param};

/// Pre-norm transformer block: `x + attn(ln(x))`, then `x + mlp(ln(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub ln1: LayerNorm,
    pub attn: MultiHeadAttention,
    pub ln2: LayerNorm,
    pub fc1: Linear,
    pub fc2: Linear,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    ln1: LnCache,
    pub attn: AttnCache,
    ln2: LnCache,
    ln2_out: Array2<f32>,
    hidden_pre: Array2<f32>,
    hidden: Array2<f32>,
}

impl Block {
    pub fn new<R: Rng>(dim: usize, heads: usize, mlp_hidden: usize, rng: &mut R) -> Self {
        Self {
            ln1: LayerNorm::new(dim),
            attn: MultiHeadAttention::new(dim, heads, rng),
            ln2: LayerNorm::new(dim),
            fc1: Linear::new(dim, mlp_hidden, rng),
            fc2: Linear::new(mlp_hidden, dim, rng),
        }
    }

    pub fn forward(&self, x: &Array2<f32>) -> (Array2<f32>, BlockCache) {
        let (h1, ln1) = self.ln1.forward(x);
        let (a, attn) = self.attn.forward(&h1);
        let x1 = x + &a;
        let (ln2_out, ln2) = self.ln2.forward(&x1);
        let hidden_pre = self.fc1.forward(&ln2_out);
        let hidden = hidden_pre.mapv(gelu);
        let y = &x1 + &self.fc2.forward(&hidden);
        (
            y,
            BlockCache {
                ln1,
                attn,
                ln2,
                ln2_out,
                hidden_pre,
                hidden,
            },
        )
    }

    pub fn backward(&mut self, cache: &BlockCache, dy: &Array2<f32>) -> Array2<f32> {
        let dhidden = self.fc2.backward(&cache.hidden, dy);
        let mut dpre = dhidden;
        dpre.zip_mut_with(&cache.hidden_pre, |g, x| *g *= gelu_grad(*x));
        let dln2 = self.fc1.backward(&cache.ln2_out, &dpre);
        let dx1 = dy + &self.ln2.backward(&cache.ln2, &dln2);
        let dh1 = self.attn.backward(&cache.attn, &dx1);
        &dx1 + &self.ln1.backward(&cache.ln1, &dh1)
    }
}

impl Module for Block {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        self.ln1.visit(&join(prefix, "ln1"), f);
        self.attn.visit(&join(prefix, "attn"), f);
        self.ln2.visit(&join(prefix, "ln2"), f);
        self.fc1.visit(&join(prefix, "fc1"), f);
        self.fc2.visit(&join(prefix, "fc2"), f);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.ln1.visit_mut(&join(prefix, "ln1"), f);
        self.attn.visit_mut(&join(prefix, "attn"), f);
        self.ln2.visit_mut(&join(prefix, "ln2"), f);
        self.fc1.visit_mut(&join(prefix, "fc1"), f);
        self.fc2.visit_mut(&join(prefix, "fc2"), f);
    }
}
