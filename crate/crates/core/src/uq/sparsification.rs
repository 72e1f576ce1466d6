use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparsificationConfig {
    pub grid_steps: usize,
    /// Permutations averaged for the random baseline.
    pub random_permutations: usize,
    pub seed: u64,
}

impl Default for SparsificationConfig {
    fn default() -> Self {
        Self {
            grid_steps: 20,
            random_permutations: 100,
            seed: 0,
        }
    }
}

/// Normalized MAE of the retained set as the most-uncertain samples are
/// removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsificationCurve {
    pub fractions_removed: Vec<f64>,
    pub modeled: Vec<f64>,
    pub oracle: Vec<f64>,
    pub random: Vec<f64>,
}

impl SparsificationCurve {
    /// `fraction,modeled,oracle,random` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,modeled,oracle,random\n");
        for i in 0..self.fractions_removed.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.fractions_removed[i], self.modeled[i], self.oracle[i], self.random[i]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ause {
    pub modeled: f64,
    pub random: f64,
}

/// Retained-set MAE for each grid fraction, removing samples in `order`.
fn curve_for(abs_err: &[f64], order: &[usize], steps: usize) -> Vec<f64> {
    let n = abs_err.len();
    // suffix sums over the removal order
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + abs_err[order[i]];
    }
    (0..steps)
        .map(|j| {
            let removed = j * n / steps;
            suffix[removed] / (n - removed) as f64
        })
        .collect()
}

fn descending_order(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    // stable: ties keep index order
    idx.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
    idx
}

pub fn sparsification(
    errors: &[f64],
    uncertainties: &[f64],
    config: &SparsificationConfig,
) -> Result<SparsificationCurve> {
    let n = errors.len();
    let steps = config.grid_steps;
    if uncertainties.len() != n {
        return Err(Error::Shape {
            axis: "uncertainties",
            detail: format!("{n} errors vs {} uncertainties", uncertainties.len()),
        });
    }
    if steps == 0 || n < steps {
        return Err(Error::Domain(format!(
            "need at least {steps} samples (and a non-empty grid), got {n}"
        )));
    }
    if errors.iter().chain(uncertainties).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite error or uncertainty".into()));
    }
    let abs_err: Vec<f64> = errors.iter().map(|e| e.abs()).collect();

    let modeled = curve_for(&abs_err, &descending_order(uncertainties), steps);
    let oracle = curve_for(&abs_err, &descending_order(&abs_err), steps);
    let mut random = vec![0.0; steps];
    let reps = config.random_permutations.max(1);
    let mut rng = seed::rng(config.seed, &[0xa05e]);
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..reps {
        perm.shuffle(&mut rng);
        for (acc, v) in random.iter_mut().zip(curve_for(&abs_err, &perm, steps)) {
            *acc += v / reps as f64;
        }
    }

    let norm = modeled.iter().chain(&oracle).copied().fold(0.0, f64::max);
    let scale = |v: Vec<f64>| {
        if norm > 0.0 {
            v.into_iter().map(|x| x / norm).collect()
        } else {
            v
        }
    };
    Ok(SparsificationCurve {
        fractions_removed: (0..steps).map(|j| j as f64 / steps as f64).collect(),
        modeled: scale(modeled),
        oracle: scale(oracle),
        random: scale(random),
    })
}

/// Mean gap to the oracle curve over the grid.
pub fn ause(curve: &SparsificationCurve) -> Ause {
    let n = curve.oracle.len().max(1) as f64;
    let gap = |c: &[f64]| c.iter().zip(&curve.oracle).map(|(a, o)| a - o).sum::<f64>() / n;
    Ause {
        modeled: gap(&curve.modeled),
        random: gap(&curve.random),
    }
}
