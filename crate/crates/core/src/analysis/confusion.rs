use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    /// Diagonal over row sum; `None` for classes without samples.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub accuracy: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn confusion_matrix(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape {
            axis: "labels",
            detail: format!("{} predictions vs {} labels", predictions.len(), labels.len()),
        });
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= num_classes || l >= num_classes {
            return Err(Error::Domain(format!(
                "class id out of range 0..{num_classes}: ({l}, {p})"
            )));
        }
        counts[l][p] += 1;
    }
    let per_class_accuracy = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: u64 = row.iter().sum();
            (n > 0).then(|| row[i] as f64 / n as f64)
        })
        .collect();
    let correct: u64 = (0..num_classes).map(|i| counts[i][i]).sum();
    let accuracy = if labels.is_empty() {
        0.0
    } else {
        correct as f64 / labels.len() as f64
    };
    Ok(ConfusionMatrix {
        counts,
        per_class_accuracy,
        accuracy,
    })
}
