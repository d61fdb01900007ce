use serde::{Deserialize, Serialize};

use super::{Activation, LayeredModel, LossKind};
use crate::error::{Error, Result};

/// Architecture family used for base and independent models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    /// One identity output unit, MSE.
    Linear,
    /// One sigmoid output unit, binary cross-entropy.
    Logistic,
    Mlp {
        hidden: Vec<usize>,
        #[serde(default = "default_hidden_activation")]
        activation: Activation,
        #[serde(default)]
        classification: bool,
    },
}

fn default_hidden_activation() -> Activation {
    Activation::Relu
}

impl ModelSpec {
    pub fn is_classification(&self) -> bool {
        match self {
            ModelSpec::Linear => false,
            ModelSpec::Logistic => true,
            ModelSpec::Mlp { classification, .. } => *classification,
        }
    }

    /// Fresh Glorot-initialized model for `input_dim` features.
    pub fn build(&self, input_dim: usize, seed: u64) -> Result<LayeredModel> {
        if input_dim == 0 {
            return Err(Error::Argument("model needs at least one input feature".into()));
        }
        match self {
            ModelSpec::Linear => LayeredModel::glorot(input_dim, &[(1, Activation::Identity)], LossKind::Mse, seed),
            ModelSpec::Logistic => {
                LayeredModel::glorot(input_dim, &[(1, Activation::Sigmoid)], LossKind::BinaryCrossEntropy, seed)
            }
            ModelSpec::Mlp {
                hidden,
                activation,
                classification,
            } => {
                if hidden.contains(&0) {
                    return Err(Error::Config("hidden widths must be positive".into()));
                }
                let mut widths: Vec<(usize, Activation)> = hidden.iter().map(|&w| (w, *activation)).collect();
                let (out_act, loss) = if *classification {
                    (Activation::Sigmoid, LossKind::BinaryCrossEntropy)
                } else {
                    (Activation::Identity, LossKind::Mse)
                };
                widths.push((1, out_act));
                LayeredModel::glorot(input_dim, &widths, loss, seed)
            }
        }
    }
}
