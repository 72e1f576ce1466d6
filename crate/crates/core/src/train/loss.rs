use std::f64::consts::PI;

use ndarray::{Array1, ArrayView1};

use crate::model::MixtureParams;
use crate::{Error, Result};

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Negative log-softmax of the true class and its gradient with respect to
/// the logits.
pub fn cross_entropy(logits: ArrayView1<f32>, label: usize) -> Result<(f64, Array1<f32>)> {
    let n = logits.len();
    if label >= n {
        return Err(Error::Domain(format!("label {label} outside 0..{n}")));
    }
    let l: Vec<f64> = logits.iter().map(|&v| f64::from(v)).collect();
    let lse = log_sum_exp(&l);
    let grad = Array1::from_iter(
        l.iter()
            .enumerate()
            .map(|(i, &v)| ((v - lse).exp() - if i == label { 1.0 } else { 0.0 }) as f32),
    );
    Ok((lse - l[label], grad))
}

/// Mean cross-entropy over a batch of logit vectors.
pub fn cross_entropy_loss(logits: &[Array1<f32>], labels: &[usize]) -> Result<f64> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(Error::Shape {
            axis: "batch",
            detail: format!("{} logit rows vs {} labels", logits.len(), labels.len()),
        });
    }
    let mut total = 0.0;
    for (l, &y) in logits.iter().zip(labels) {
        total += cross_entropy(l.view(), y)?.0;
    }
    Ok(total / labels.len() as f64)
}

fn log_normal(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    -0.5 * (2.0 * PI).ln() - sigma.ln() - 0.5 * z * z
}

/// Mean negative log-likelihood of `targets` under the mixtures.
pub fn nll_loss(params: &[MixtureParams], targets: &[f64], sigma_floor: f64) -> Result<f64> {
    if params.len() != targets.len() || params.is_empty() {
        return Err(Error::Shape {
            axis: "batch",
            detail: format!("{} mixtures vs {} targets", params.len(), targets.len()),
        });
    }
    let mut total = 0.0;
    for (p, &y) in params.iter().zip(targets) {
        p.validate()?;
        if let Some(s) = p.stds.iter().find(|&&s| s < sigma_floor) {
            return Err(Error::Domain(format!("mixture std {s} below floor {sigma_floor}")));
        }
        let terms: Vec<f64> = (0..p.k())
            .map(|k| p.weights[k].ln() + log_normal(y, p.means[k], p.stds[k]))
            .collect();
        total -= log_sum_exp(&terms);
    }
    Ok(total / targets.len() as f64)
}

/// NLL of one target under the mixture built from raw head outputs
/// `[logits; means; std pre-activations]`, and its gradient with respect to
/// those outputs.
pub fn nll_raw(raw: &[f64], y: f64, sigma_floor: f64) -> Result<(f64, Vec<f64>)> {
    if raw.is_empty() || !raw.len().is_multiple_of(3) {
        return Err(Error::Shape {
            axis: "mixture",
            detail: format!("raw head output of length {}", raw.len()),
        });
    }
    let k = raw.len() / 3;
    let (a, rest) = raw.split_at(k);
    let (mu, r) = rest.split_at(k);
    let lse_a = log_sum_exp(a);
    let sigma: Vec<f64> = r
        .iter()
        .map(|&v| crate::model::mixture::softplus(v) + sigma_floor)
        .collect();
    let terms: Vec<f64> = (0..k).map(|i| a[i] - lse_a + log_normal(y, mu[i], sigma[i])).collect();
    let lse = log_sum_exp(&terms);
    let mut grad = vec![0.0; 3 * k];
    for i in 0..k {
        let gamma = (terms[i] - lse).exp();
        let pi = (a[i] - lse_a).exp();
        let z = (y - mu[i]) / sigma[i];
        let sig_r = 1.0 / (1.0 + (-r[i]).exp());
        grad[i] = pi - gamma;
        grad[k + i] = -gamma * z / sigma[i];
        grad[2 * k + i] = gamma * (1.0 - z * z) / sigma[i] * sig_r;
    }
    Ok((-lse, grad))
}
