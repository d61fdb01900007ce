use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};

/// Predictions are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(1/2N) * sum (pred - target)^2`. Note the factor 1/2: reported
    /// evaluation metrics use the plain 1/N mean instead.
    Mse,
    BinaryCrossEntropy,
}

fn check(pred: ArrayView1<f64>, target: ArrayView1<f64>) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::Argument("loss of an empty prediction vector".into()));
    }
    if pred.len() != target.len() {
        return Err(shape("loss target", pred.len(), target.len()));
    }
    Ok(())
}

pub fn loss(pred: ArrayView1<f64>, target: ArrayView1<f64>, kind: LossKind) -> Result<f64> {
    check(pred, target)?;
    let n = pred.len() as f64;
    let total: f64 = match kind {
        LossKind::Mse => pred.iter().zip(target).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / 2.0,
        LossKind::BinaryCrossEntropy => pred
            .iter()
            .zip(target)
            .map(|(&p, &y)| {
                let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum(),
    };
    Ok(total / n)
}

/// dE/dpred for each sample, already divided by N.
pub fn loss_gradient(pred: ArrayView1<f64>, target: ArrayView1<f64>, kind: LossKind) -> Result<Array1<f64>> {
    check(pred, target)?;
    let n = pred.len() as f64;
    Ok(match kind {
        LossKind::Mse => pred
            .iter()
            .zip(target)
            .map(|(p, y)| (p - y) / n)
            .collect(),
        LossKind::BinaryCrossEntropy => pred
            .iter()
            .zip(target)
            .map(|(&p, &y)| {
                if p <= BCE_CLAMP || p >= 1.0 - BCE_CLAMP {
                    // clamp is flat here
                    0.0
                } else {
                    (p - y) / (p * (1.0 - p)) / n
                }
            })
            .collect(),
    })
}
