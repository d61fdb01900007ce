use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{loss_gradient, LayeredModel};
use crate::error::{Error, Result};

/// Gradient of one trainable layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub biases: Option<Array1<f64>>,
}

/// Result of a backward pass. `layers[k]` is `None` for frozen layers.
/// `input` is dE/d(input), which the mask layer needs even when every
/// model parameter is frozen.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Option<LayerGradient>>,
    pub input: Array2<f64>,
}

impl Gradients {
    /// True when no parameter received a gradient.
    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(Option::is_none)
    }
}

/// Data loss plus `l2_lambda * sum(w^2)` over trainable weight matrices.
pub fn objective(model: &LayeredModel, x: ArrayView2<f64>, y: ArrayView1<f64>, l2_lambda: f64) -> Result<f64> {
    let data = model.evaluate(x, y)?;
    let penalty: f64 = model
        .layers
        .iter()
        .filter(|l| l.trainable)
        .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
        .sum();
    Ok(data + l2_lambda * penalty)
}

/// Backpropagates [`objective`] through the layer chain.
pub fn backward(model: &LayeredModel, x: ArrayView2<f64>, y: ArrayView1<f64>, l2_lambda: f64) -> Result<Gradients> {
    // activations[0] is the input, activations[k + 1] the output of layer k
    let mut activations = Vec::with_capacity(model.layers.len() + 1);
    if x.ncols() != model.input_dim {
        return Err(crate::error::shape("layer 0 input", model.input_dim, x.ncols()));
    }
    activations.push(x.to_owned());
    for layer in &model.layers {
        let next = layer.forward(activations.last().unwrap().view());
        activations.push(next);
    }
    let output = activations.last().unwrap();
    if output.ncols() != 1 {
        return Err(crate::error::shape("model output", 1, output.ncols()));
    }
    let pred = output.column(0);
    let dpred = loss_gradient(pred, y, model.loss_kind)?;

    // delta holds dE/da for the current layer's output
    let mut delta: Array2<f64> = dpred.insert_axis(Axis(1));
    let mut layers = vec![None; model.layers.len()];
    for (k, layer) in model.layers.iter().enumerate().rev() {
        let out = &activations[k + 1];
        let act = layer.activation;
        // dE/dz
        let dz = &delta * &out.mapv(|a| act.derivative_from_output(a));
        if layer.trainable {
            let mut gw = activations[k].t().dot(&dz);
            if l2_lambda > 0.0 {
                gw.scaled_add(2.0 * l2_lambda, &layer.weights);
            }
            let gb = layer.biases.as_ref().map(|_| dz.sum_axis(Axis(0)));
            let finite = gw.iter().all(|v| v.is_finite()) && gb.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(Error::NonFiniteGradient { layer: k });
            }
            layers[k] = Some(LayerGradient { weights: gw, biases: gb });
        }
        delta = dz.dot(&layer.weights.t());
    }
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { layer: 0 });
    }
    Ok(Gradients { layers, input: delta })
}
