//! A small dense feedforward engine: layers, activations, losses, manual
//! backpropagation and ADAM.
//!
//! Models here are deliberately plain data. Every layer carries a
//! `trainable` flag; the optimizer never touches a frozen layer, which is
//! what lets the mask-retraining loop treat the interpreted model as a
//! fixed function.

mod adam;
mod backprop;
mod loss;
mod spec;
mod train;

pub use adam::{adam_step, AdamState};
pub use backprop::{backward, objective, Gradients, LayerGradient};
pub use loss::{loss, loss_gradient, LossKind, BCE_CLAMP};
pub use spec::ModelSpec;
pub use train::{epoch_order, train, train_until, Samples, TrainConfig, TrainHistory};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a = f(z)`.
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected layer. `weights` is `in_dim x out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Option<Array1<f64>>,
    pub activation: Activation,
    pub trainable: bool,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, biases: Option<Array1<f64>>, activation: Activation) -> Result<Self> {
        if let Some(b) = &biases {
            if b.len() != weights.ncols() {
                return Err(shape("dense layer biases", weights.ncols(), b.len()));
            }
        }
        Ok(DenseLayer {
            weights: weights.as_standard_layout().into_owned(),
            biases,
            activation,
            trainable: true,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, bias: bool, rng: &mut R) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = Array2::from_shape_fn((in_dim, out_dim), |_| rng.random_range(-bound..bound));
        DenseLayer {
            weights,
            biases: bias.then(|| Array1::zeros(out_dim)),
            activation,
            trainable: true,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights);
        if let Some(b) = &self.biases {
            z += b;
        }
        let act = self.activation;
        z.mapv_inplace(|v| act.apply(v));
        z
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|v| v.is_finite())
            && self.biases.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// An ordered chain of dense layers plus the loss it is trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredModel {
    pub layers: Vec<DenseLayer>,
    pub loss_kind: LossKind,
    pub input_dim: usize,
}

impl LayeredModel {
    /// Assembles a model, checking that adjacent layer dimensions chain.
    pub fn new(input_dim: usize, layers: Vec<DenseLayer>, loss_kind: LossKind) -> Result<Self> {
        let mut width = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_dim() != width {
                return Err(shape(format!("layer {k} input"), width, layer.in_dim()));
            }
            width = layer.out_dim();
        }
        Ok(LayeredModel {
            layers,
            loss_kind,
            input_dim,
        })
    }

    /// Builds a model with Glorot-initialized layers of the given widths.
    /// `widths` lists each layer's output width; activations pair up with it.
    pub fn glorot(
        input_dim: usize,
        widths: &[(usize, Activation)],
        loss_kind: LossKind,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(widths.len());
        let mut in_dim = input_dim;
        for &(out_dim, act) in widths {
            layers.push(DenseLayer::glorot(in_dim, out_dim, act, true, &mut rng));
            in_dim = out_dim;
        }
        LayeredModel::new(input_dim, layers, loss_kind)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, DenseLayer::out_dim)
    }

    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        if batch.ncols() != self.input_dim {
            return Err(shape("layer 0 input", self.input_dim, batch.ncols()));
        }
        let mut a = batch.to_owned();
        for layer in &self.layers {
            a = layer.forward(a.view());
        }
        Ok(a)
    }

    /// Forward pass returning the first output column, the prediction vector
    /// used by every loss.
    pub fn predict(&self, batch: ArrayView2<f64>) -> Result<Array1<f64>> {
        let out = self.forward(batch)?;
        if out.ncols() != 1 {
            return Err(shape("model output", 1, out.ncols()));
        }
        Ok(out.index_axis_move(Axis(1), 0))
    }

    /// Data loss of the model on `(x, y)` under its own loss kind.
    pub fn evaluate(&self, x: ArrayView2<f64>, y: ndarray::ArrayView1<f64>) -> Result<f64> {
        let pred = self.predict(x)?;
        loss(pred.view(), y, self.loss_kind)
    }

    pub fn freeze(&mut self) {
        for layer in &mut self.layers {
            layer.trainable = false;
        }
    }

    pub fn frozen(mut self) -> Self {
        self.freeze();
        self
    }

    pub fn is_frozen(&self) -> bool {
        self.layers.iter().all(|l| !l.trainable)
    }

    pub fn trainable_parameter_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.trainable)
            .map(|l| l.weights.len() + l.biases.as_ref().map_or(0, |b| b.len()))
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// On-disk form of a [`LayeredModel`]. Weights are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub layers: Vec<LayerDocument>,
    pub loss_kind: LossKind,
    pub input_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDocument {
    #[serde(rename = "in")]
    pub in_dim: usize,
    #[serde(rename = "out")]
    pub out_dim: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Option<Vec<f64>>,
    pub trainable: bool,
}

impl From<&LayeredModel> for ModelDocument {
    fn from(model: &LayeredModel) -> Self {
        ModelDocument {
            layers: model
                .layers
                .iter()
                .map(|l| LayerDocument {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    biases: l.biases.as_ref().map(|b| b.to_vec()),
                    trainable: l.trainable,
                })
                .collect(),
            loss_kind: model.loss_kind,
            input_dim: model.input_dim,
        }
    }
}

impl TryFrom<ModelDocument> for LayeredModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (k, l) in doc.layers.into_iter().enumerate() {
            let weights = Array2::from_shape_vec((l.in_dim, l.out_dim), l.weights)
                .map_err(|_| Error::Argument(format!("layer {k}: weight count does not match {}x{}", l.in_dim, l.out_dim)))?;
            let mut layer = DenseLayer::new(weights, l.biases.map(Array1::from), l.activation)?;
            layer.trainable = l.trainable;
            layers.push(layer);
        }
        LayeredModel::new(doc.input_dim, layers, doc.loss_kind)
    }
}
