use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::{join, Module, Param};

/// `y = x W + b` with `W: [in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let a = (6.0 / (inputs + outputs) as f32).sqrt();
        let w = Array2::from_shape_fn((inputs, outputs), |_| rng.random_range(-a..=a));
        Self {
            weight: Param::new(w, true),
            bias: Param::zeros(1, outputs, false),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.ncols()
    }

    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        let mut y = x.dot(&self.weight.value);
        y += &self.bias.value;
        y
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&mut self, x: &Array2<f32>, dy: &Array2<f32>) -> Array2<f32> {
        general_mat_mul(1.0, &x.t(), dy, 1.0, &mut self.weight.grad);
        self.bias.grad += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        dy.dot(&self.weight.value.t())
    }
}

impl Module for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&join(prefix, "weight"), &self.weight);
        f(&join(prefix, "bias"), &self.bias);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&join(prefix, "weight"), &mut self.weight);
        f(&join(prefix, "bias"), &mut self.bias);
    }
}

const LN_EPS: f32 = 1e-5;

/// Layer normalization over the feature axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Param,
    pub beta: Param,
}

#[derive(Debug, Clone)]
pub struct LnCache {
    xhat: Array2<f32>,
    rstd: Array1<f32>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Param::new(Array2::ones((1, dim)), false),
            beta: Param::zeros(1, dim, false),
        }
    }

    pub fn forward(&self, x: &Array2<f32>) -> (Array2<f32>, LnCache) {
        let d = x.ncols() as f32;
        let mut xhat = x.clone();
        let mut rstd = Array1::zeros(x.nrows());
        for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
            let mean = row.sum() / d;
            row -= mean;
            let var = row.iter().map(|v| v * v).sum::<f32>() / d;
            *r = 1.0 / (var + LN_EPS).sqrt();
            row *= *r;
        }
        let mut y = &xhat * &self.gamma.value;
        y += &self.beta.value;
        (y, LnCache { xhat, rstd })
    }

    pub fn backward(&mut self, cache: &LnCache, dy: &Array2<f32>) -> Array2<f32> {
        self.gamma.grad += &(dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
        self.beta.grad += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dxhat = dy * &self.gamma.value;
        let d = dy.ncols() as f32;
        let mut dx = Array2::zeros(dy.raw_dim());
        for i in 0..dy.nrows() {
            let g = dxhat.row(i);
            let xh = cache.xhat.row(i);
            let sum_g = g.sum();
            let sum_gx = g.iter().zip(xh.iter()).map(|(a, b)| a * b).sum::<f32>();
            let r = cache.rstd[i];
            for j in 0..dy.ncols() {
                dx[[i, j]] = r / d * (d * g[j] - sum_g - xh[j] * sum_gx);
            }
        }
        dx
    }
}

impl Module for LayerNorm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&join(prefix, "gamma"), &self.gamma);
        f(&join(prefix, "beta"), &self.beta);
    }
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&join(prefix, "gamma"), &mut self.gamma);
        f(&join(prefix, "beta"), &mut self.beta);
    }
}

const GELU_C: f32 = 0.797_884_6; // sqrt(2/pi)

/// Tanh-approximated GELU.
pub fn gelu(x: f32) -> f32 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_grad(x: f32) -> f32 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{check, matrix};

    fn proj_loss(y: &Array2<f32>, w: &Array2<f32>) -> f64 {
        y.iter().zip(w.iter()).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum()
    }

    #[test]
    fn linear_gradients() {
        let mut rng = crate::seed::rng(1, &[]);
        let mut lin = Linear::new(5, 4, &mut rng);
        lin.bias.value = matrix(1, 4, 9);
        let mut x = matrix(3, 5, 2);
        let w = matrix(3, 4, 3);
        let dx = lin.backward(&x, &w);
        let snapshot = lin.clone();
        check(
            &mut x,
            &dx,
            &mut |x| proj_loss(&snapshot.forward(x), &w),
            1e-2,
            1e-2,
            "dx",
        );
        let mut wt = lin.weight.value.clone();
        let gw = lin.weight.grad.clone();
        check(
            &mut wt,
            &gw,
            &mut |wt| {
                let mut l = snapshot.clone();
                l.weight.value = wt.clone();
                proj_loss(&l.forward(&x), &w)
            },
            1e-2,
            1e-2,
            "dW",
        );
        assert_eq!(lin.bias.grad, w.sum_axis(Axis(0)).insert_axis(Axis(0)));
    }

    #[test]
    fn layernorm_gradients() {
        let mut ln = LayerNorm::new(6);
        ln.gamma.value = matrix(1, 6, 4) + 1.0;
        ln.beta.value = matrix(1, 6, 5);
        let mut x = matrix(4, 6, 6) * 2.0;
        let w = matrix(4, 6, 7);
        let (_, cache) = ln.forward(&x);
        let dx = ln.backward(&cache, &w);
        let snap = ln.clone();
        check(
            &mut x,
            &dx,
            &mut |x| proj_loss(&snap.forward(x).0, &w),
            1e-2,
            2e-2,
            "dx",
        );
        let mut g = snap.gamma.value.clone();
        let gg = ln.gamma.grad.clone();
        check(
            &mut g,
            &gg,
            &mut |g| {
                let mut l = snap.clone();
                l.gamma.value = g.clone();
                proj_loss(&l.forward(&x).0, &w)
            },
            1e-2,
            2e-2,
            "dgamma",
        );
    }

    #[test]
    fn layernorm_normalizes_rows() {
        let ln = LayerNorm::new(8);
        let (y, _) = ln.forward(&(matrix(3, 8, 1) * 5.0 + 2.0));
        for row in y.rows() {
            assert!(row.mean().unwrap().abs() < 1e-5);
            let var = row.iter().map(|v| v * v).sum::<f32>() / 8.0;
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn gelu_derivative() {
        for i in -40..40 {
            let x = i as f32 * 0.1;
            let h = 1e-2;
            let num = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((num - gelu_grad(x)).abs() < 1e-3, "{x}");
        }
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(10.0) - 10.0).abs() < 1e-4);
    }

    #[test]
    fn visit_names() {
        let mut rng = crate::seed::rng(1, &[]);
        let lin = Linear::new(2, 3, &mut rng);
        let mut names = vec![];
        lin.visit("head", &mut |n, _| names.push(n.to_string()));
        assert_eq!(names, vec!["head.weight", "head.bias"]);
        assert_eq!(lin.num_params(), 9);
    }
}
