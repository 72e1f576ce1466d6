use std::f64::consts::PI;

use ndarray::{Array2, Zip};

use super::Module;

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
    step: i32,
    moments: Vec<(Array2<f32>, Array2<f32>)>,
}

impl AdamW {
    pub fn new(weight_decay: f32) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One update of every parameter from its accumulated gradient.
    pub fn step<M: Module + ?Sized>(&mut self, model: &mut M, lr: f32) {
        self.step += 1;
        let (b1, b2, eps, wd) = (self.beta1, self.beta2, self.eps, self.weight_decay);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let mut i = 0;
        let moments = &mut self.moments;
        model.visit_mut("", &mut |_, p| {
            if moments.len() <= i {
                moments.push((Array2::zeros(p.value.raw_dim()), Array2::zeros(p.value.raw_dim())));
            }
            let (m, v) = &mut moments[i];
            let decay = if p.decay { wd } else { 0.0 };
            Zip::from(&mut p.value)
                .and(&p.grad)
                .and(m)
                .and(v)
                .for_each(|w, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let mhat = *m / c1;
                    let vhat = *v / c2;
                    *w -= lr * (mhat / (vhat.sqrt() + eps) + decay * *w);
                });
            i += 1;
        });
    }
}

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<M: Module + ?Sized>(model: &mut M, max_norm: f64) -> f64 {
    let mut sq = 0.0f64;
    model.visit("", &mut |_, p| {
        sq += p.grad.iter().map(|g| f64::from(*g).powi(2)).sum::<f64>()
    });
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = (max_norm / norm) as f32;
        model.visit_mut("", &mut |_, p| p.grad *= s);
    }
    norm
}

/// Linear warmup then cosine decay to zero over `total` steps.
pub fn cosine_lr(base: f64, step: usize, total: usize, warmup: usize) -> f64 {
    if total == 0 {
        return base;
    }
    if step < warmup {
        return base * (step + 1) as f64 / warmup as f64;
    }
    let span = total.saturating_sub(warmup).max(1);
    let progress = ((step - warmup) as f64 / span as f64).min(1.0);
    base * 0.5 * (1.0 + (PI * progress).cos())
}
