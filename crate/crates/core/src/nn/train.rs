use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, backward, AdamState, LayeredModel};
use crate::error::{shape, Error, Result};

/// Optimizer and schedule settings shared by base, feature and independent
/// models. Defaults are the usual ADAM constants with seed 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub l2_lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 10,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 3,
            l2_lambda: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0 && self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam betas must lie in (0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        if !(self.l2_lambda >= 0.0) {
            return bad("l2_lambda must be nonnegative");
        }
        Ok(())
    }
}

/// Borrowed feature matrix and target vector.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView1<'a, f64>,
}

impl<'a> Samples<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView1<'a, f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(shape("samples target", x.nrows(), y.len()));
        }
        if x.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Samples { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    /// Empty when no validation split was supplied.
    pub val_loss: Vec<f64>,
    pub final_loss: f64,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }
}

/// Sample order for one epoch: a ChaCha stream keyed by `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Mini-batch ADAM for `config.epochs` epochs.
pub fn train(model: &mut LayeredModel, train: Samples<'_>, val: Option<Samples<'_>>, config: &TrainConfig) -> Result<TrainHistory> {
    train_until(model, train, val, config, config.epochs, |_, _| false)
}

/// Like [`train`] but runs at most `max_epochs` and calls `stop(epoch,
/// train_loss)` after each epoch (1-based); returning true ends training.
pub fn train_until(
    model: &mut LayeredModel,
    train: Samples<'_>,
    val: Option<Samples<'_>>,
    config: &TrainConfig,
    max_epochs: usize,
    mut stop: impl FnMut(usize, f64) -> bool,
) -> Result<TrainHistory> {
    config.validate()?;
    if max_epochs < 1 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    if train.x.ncols() != model.input_dim {
        return Err(shape("training data columns", model.input_dim, train.x.ncols()));
    }
    let mut states: Vec<Option<(AdamState, Option<AdamState>)>> = model
        .layers
        .iter()
        .map(|l| {
            l.trainable
                .then(|| (AdamState::new(l.weights.len()), l.biases.as_ref().map(|b| AdamState::new(b.len()))))
        })
        .collect();

    let mut history = TrainHistory::default();
    for epoch in 1..=max_epochs {
        let diverged = Error::Diverged {
            last_finite_epoch: epoch - 1,
        };
        let order = epoch_order(train.len(), config.seed, epoch);
        for chunk in order.chunks(config.batch_size) {
            let xb = train.x.select(Axis(0), chunk);
            let yb = train.y.select(Axis(0), chunk);
            let grads = match backward(model, xb.view(), yb.view(), config.l2_lambda) {
                Ok(g) => g,
                Err(Error::NonFiniteGradient { .. }) => return Err(diverged),
                Err(e) => return Err(e),
            };
            for ((layer, grad), state) in model.layers.iter_mut().zip(grads.layers).zip(states.iter_mut()) {
                let (Some(grad), Some((ws, bs))) = (grad, state.as_mut()) else {
                    continue;
                };
                let gw = grad.weights.as_standard_layout();
                adam_step(weights_slice(&mut layer.weights), gw.as_slice().unwrap(), ws, config)?;
                if let (Some(b), Some(gb), Some(bs)) = (layer.biases.as_mut(), grad.biases, bs.as_mut()) {
                    adam_step(b.as_slice_mut().unwrap(), gb.as_slice().unwrap(), bs, config)?;
                }
                if !layer.is_finite() {
                    return Err(diverged);
                }
            }
        }
        let loss = model.evaluate(train.x, train.y)?;
        if !loss.is_finite() {
            return Err(diverged);
        }
        history.train_loss.push(loss);
        if let Some(v) = val {
            history.val_loss.push(model.evaluate(v.x, v.y)?);
        }
        history.final_loss = loss;
        if stop(epoch, loss) {
            break;
        }
    }
    Ok(history)
}

fn weights_slice(w: &mut ndarray::Array2<f64>) -> &mut [f64] {
    if !w.is_standard_layout() {
        *w = w.as_standard_layout().into_owned();
    }
    w.as_slice_mut().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LossKind};
    use ndarray::{Array1, Array2};
    use rand::Rng;

    fn linear_data(n: usize) -> (Array2<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y = x.dot(&ndarray::array![0.5, -1.0, 2.0]) + 0.3;
        (x, y)
    }

    #[test]
    fn fits_noiseless_linear_data() {
        let (x, y) = linear_data(200);
        let mut m = LayeredModel::glorot(3, &[(1, Activation::Identity)], LossKind::Mse, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 300,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let h = train(&mut m, Samples::new(x.view(), y.view()).unwrap(), None, &cfg).unwrap();
        assert_eq!(h.epochs(), 300);
        assert!(h.final_loss < 1e-4, "final loss {}", h.final_loss);
    }

    #[test]
    fn zero_epochs_rejected() {
        let (x, y) = linear_data(20);
        let mut m = LayeredModel::glorot(3, &[(1, Activation::Identity)], LossKind::Mse, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let err = train(&mut m, Samples::new(x.view(), y.view()).unwrap(), None, &cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn same_seed_gives_identical_weights() {
        let (x, y) = linear_data(50);
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = LayeredModel::glorot(3, &[(4, Activation::Sigmoid), (1, Activation::Identity)], LossKind::Mse, 5).unwrap();
            let h = train(&mut m, Samples::new(x.view(), y.view()).unwrap(), Some(Samples::new(x.view(), y.view()).unwrap()), &cfg).unwrap();
            (m, h)
        };
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert_eq!(ha.val_loss.len(), 20);
    }

    #[test]
    fn frozen_layers_are_bit_identical_after_training() {
        let (x, y) = linear_data(40);
        let mut m = LayeredModel::glorot(3, &[(4, Activation::Relu), (1, Activation::Identity)], LossKind::Mse, 8).unwrap();
        m.freeze();
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        };
        train(&mut m, Samples::new(x.view(), y.view()).unwrap(), None, &cfg).unwrap();
        assert_eq!(before, m);
    }

    #[test]
    fn early_stop_hook_ends_training() {
        let (x, y) = linear_data(40);
        let mut m = LayeredModel::glorot(3, &[(1, Activation::Identity)], LossKind::Mse, 8).unwrap();
        let h = train_until(&mut m, Samples::new(x.view(), y.view()).unwrap(), None, &TrainConfig::default(), 500, |e, _| e == 7).unwrap();
        assert_eq!(h.epochs(), 7);
    }

    #[test]
    fn divergence_reports_last_finite_epoch() {
        let (x, y) = linear_data(40);
        let y = y.mapv(|v| v * 1e300);
        let mut m = LayeredModel::glorot(3, &[(1, Activation::Identity)], LossKind::Mse, 8).unwrap();
        let err = train(&mut m, Samples::new(x.view(), y.view()).unwrap(), None, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { last_finite_epoch: 0 }), "{err:?}");
    }

    #[test]
    fn epoch_orders_are_permutations_and_vary() {
        let a = epoch_order(30, 3, 1);
        let b = epoch_order(30, 3, 2);
        let mut s = a.clone();
        s.sort_unstable();
        assert_eq!(s, (0..30).collect::<Vec<_>>());
        assert_ne!(a, b);
        assert_eq!(a, epoch_order(30, 3, 1));
    }
}
