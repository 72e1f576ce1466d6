use ndarray::{s, Array2};
use rand::Rng;

use super::{join, Linear, Module, Param};

/// Multi-head self-attention with a fused QKV projection.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention {
    pub qkv: Linear,
    pub proj: Linear,
    pub heads: usize,
}

#[derive(Debug, Clone)]
pub struct AttnCache {
    x: Array2<f32>,
    qkv: Array2<f32>,
    /// Row-stochastic attention per head, `[n, n]`.
    pub probs: Vec<Array2<f32>>,
    concat: Array2<f32>,
}

impl AttnCache {
    /// Attention averaged over heads.
    pub fn mean_probs(&self) -> Array2<f32> {
        let mut m = self.probs[0].clone();
        for p in &self.probs[1..] {
            m += p;
        }
        m / self.probs.len() as f32
    }
}

fn softmax_rows(a: &mut Array2<f32>) {
    for mut row in a.rows_mut() {
        let m = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
}

impl MultiHeadAttention {
    pub fn new<R: Rng>(dim: usize, heads: usize, rng: &mut R) -> Self {
        assert!(
            heads > 0 && dim.is_multiple_of(heads),
            "embed dim {dim} not divisible by {heads} heads"
        );
        Self {
            qkv: Linear::new(dim, 3 * dim, rng),
            proj: Linear::new(dim, dim, rng),
            heads,
        }
    }

    fn dim(&self) -> usize {
        self.proj.inputs()
    }

    pub fn forward(&self, x: &Array2<f32>) -> (Array2<f32>, AttnCache) {
        let d = self.dim();
        let dh = d / self.heads;
        let scale = 1.0 / (dh as f32).sqrt();
        let qkv = self.qkv.forward(x);
        let n = x.nrows();
        let mut concat = Array2::zeros((n, d));
        let mut probs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let q = qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let k = qkv.slice(s![.., d + h * dh..d + (h + 1) * dh]);
            let v = qkv.slice(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]);
            let mut a = q.dot(&k.t()) * scale;
            softmax_rows(&mut a);
            concat.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&a.dot(&v));
            probs.push(a);
        }
        let y = self.proj.forward(&concat);
        (
            y,
            AttnCache {
                x: x.clone(),
                qkv,
                probs,
                concat,
            },
        )
    }

    pub fn backward(&mut self, cache: &AttnCache, dy: &Array2<f32>) -> Array2<f32> {
        let d = self.dim();
        let dh = d / self.heads;
        let scale = 1.0 / (dh as f32).sqrt();
        let dconcat = self.proj.backward(&cache.concat, dy);
        let mut dqkv = Array2::zeros(cache.qkv.raw_dim());
        for h in 0..self.heads {
            let q = cache.qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let k = cache.qkv.slice(s![.., d + h * dh..d + (h + 1) * dh]);
            let v = cache.qkv.slice(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]);
            let a = &cache.probs[h];
            let dout = dconcat.slice(s![.., h * dh..(h + 1) * dh]);
            let dv = a.t().dot(&dout);
            let da = dout.dot(&v.t());
            // softmax backward, row by row
            let mut ds = &da * a;
            for (mut row, arow) in ds.rows_mut().into_iter().zip(a.rows()) {
                let dot = row.sum();
                row.zip_mut_with(&arow, |g, p| *g -= p * dot);
            }
            ds *= scale;
            let dq = ds.dot(&k);
            let dk = ds.t().dot(&q);
            dqkv.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&dq);
            dqkv.slice_mut(s![.., d + h * dh..d + (h + 1) * dh]).assign(&dk);
            dqkv.slice_mut(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]).assign(&dv);
        }
        self.qkv.backward(&cache.x, &dqkv)
    }
}

impl Module for MultiHeadAttention {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        self.qkv.visit(&join(prefix, "qkv"), f);
        self.proj.visit(&join(prefix, "proj"), f);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.qkv.visit_mut(&join(prefix, "qkv"), f);
        self.proj.visit_mut(&join(prefix, "proj"), f);
    }
}
