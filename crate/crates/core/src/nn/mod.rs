//! A small f32 transformer toolkit with explicit backward passes.
//!
//! Layers own their parameters and accumulate gradients in place; forward
//! passes return the activations the matching backward pass needs.

mod attention;
mod block;
mod layers;
mod optim;

pub use attention::{AttnCache, MultiHeadAttention};
pub use block::{Block, BlockCache};
pub use layers::{gelu, gelu_grad, LayerNorm, Linear, LnCache};
pub use optim::{clip_grad_norm, cosine_lr, AdamW};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Array2<f32>,
    pub grad: Array2<f32>,
    /// Whether weight decay applies.
    pub decay: bool,
}

impl Param {
    pub fn new(value: Array2<f32>, decay: bool) -> Self {
        let grad = Array2::zeros(value.raw_dim());
        Self { value, grad, decay }
    }

    pub fn zeros(rows: usize, cols: usize, decay: bool) -> Self {
        Self::new(Array2::zeros((rows, cols)), decay)
    }

    pub fn normal<R: Rng>(rows: usize, cols: usize, std: f32, rng: &mut R) -> Self {
        let d = Normal::new(0.0f32, std).expect("positive std");
        Self::new(Array2::from_shape_fn((rows, cols), |_| d.sample(rng)), false)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Named traversal over parameters, in a fixed order.
pub trait Module {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param));

    fn zero_grad(&mut self) {
        self.visit_mut("", &mut |_, p| p.zero_grad());
    }

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, p| n += p.value.len());
        n
    }
}

pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
