//! The feature model: a frozen base model behind a trainable elementwise
//! mask `m`, so the network sees `m ⊗ x` instead of `x`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape, Error, Result};
use crate::nn::{adam_step, backward, epoch_order, loss, AdamState, LayeredModel, Samples, TrainConfig, TrainHistory};

/// Half-width of the uniform interval fresh masks are drawn from.
pub const MASK_INIT_BOUND: f64 = 0.05;

/// One scale factor per input feature. No bias, no activation.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskLayer {
    pub weights: Array1<f64>,
    pub trainable: bool,
}

impl MaskLayer {
    /// Draws i.i.d. weights from the open interval (-0.05, 0.05).
    pub fn random(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = Array1::from_shape_fn(d, |_| loop {
            let w = rng.random_range(-MASK_INIT_BOUND..MASK_INIT_BOUND);
            if w != -MASK_INIT_BOUND {
                break w;
            }
        });
        MaskLayer {
            weights,
            trainable: true,
        }
    }

    pub fn ones(d: usize) -> Self {
        MaskLayer {
            weights: Array1::ones(d),
            trainable: true,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Scales column `j` of `batch` by `mask[j]`.
pub fn apply_mask(mask: ArrayView1<f64>, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
    if mask.len() != batch.ncols() {
        return Err(shape("mask length", batch.ncols(), mask.len()));
    }
    Ok(&batch * &mask.insert_axis(Axis(0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    pub mask: MaskLayer,
    /// Always fully frozen.
    pub base: LayeredModel,
}

/// Deep-copies and freezes `base`, then prepends a fresh mask drawn from
/// `seed`.
pub fn build_feature_model(base: &LayeredModel, seed: u64) -> Result<FeatureModel> {
    if base.layers.is_empty() || base.input_dim == 0 {
        return Err(Error::Argument("base model has no layers or no inputs".into()));
    }
    Ok(FeatureModel {
        mask: MaskLayer::random(base.input_dim, seed),
        base: base.clone().frozen(),
    })
}

impl FeatureModel {
    pub fn mask_weights(&self) -> Vec<f64> {
        self.mask.weights.to_vec()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.base.forward(apply_mask(self.mask.weights.view(), x)?.view())
    }

    /// Data loss of the masked model (no penalty term).
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<f64> {
        let masked = apply_mask(self.mask.weights.view(), x)?;
        let pred = self.base.predict(masked.view())?;
        loss(pred.view(), y, self.base.loss_kind)
    }

    /// dE/dm, including `2 * l2_lambda * m` for the mask penalty.
    pub fn mask_gradient(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, l2_lambda: f64) -> Result<Array1<f64>> {
        let masked = apply_mask(self.mask.weights.view(), x)?;
        let grads = backward(&self.base, masked.view(), y, 0.0)?;
        // dE/dm_j = sum_r dE/dz_rj * x_rj
        let mut g = (&grads.input * &x).sum_axis(Axis(0));
        if l2_lambda > 0.0 {
            g.scaled_add(2.0 * l2_lambda, &self.mask.weights);
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { layer: 0 });
        }
        Ok(g)
    }

    /// Trains the mask only. Shuffling is keyed by `config.seed`; `stop` is
    /// consulted after every epoch with the full-split data loss.
    pub fn train_until(
        &mut self,
        train: Samples<'_>,
        config: &TrainConfig,
        max_epochs: usize,
        mut stop: impl FnMut(usize, f64) -> bool,
    ) -> Result<TrainHistory> {
        config.validate()?;
        if max_epochs < 1 {
            return Err(Error::Config("max epochs must be >= 1".into()));
        }
        if train.x.ncols() != self.mask.len() {
            return Err(shape("training data columns", self.mask.len(), train.x.ncols()));
        }
        let mut state = AdamState::new(self.mask.len());
        let mut history = TrainHistory::default();
        for epoch in 1..=max_epochs {
            let diverged = Error::Diverged {
                last_finite_epoch: epoch - 1,
            };
            for chunk in epoch_order(train.len(), config.seed, epoch).chunks(config.batch_size) {
                let xb = train.x.select(Axis(0), chunk);
                let yb = train.y.select(Axis(0), chunk);
                let g = match self.mask_gradient(xb.view(), yb.view(), config.l2_lambda) {
                    Ok(g) => g,
                    Err(Error::NonFiniteGradient { .. }) => return Err(diverged),
                    Err(e) => return Err(e),
                };
                if self.mask.trainable {
                    adam_step(self.mask.weights.as_slice_mut().unwrap(), g.as_slice().unwrap(), &mut state, config)?;
                }
                if self.mask.weights.iter().any(|w| !w.is_finite()) {
                    return Err(diverged);
                }
            }
            let l = self.loss(train.x, train.y)?;
            if !l.is_finite() {
                return Err(diverged);
            }
            history.train_loss.push(l);
            history.final_loss = l;
            if stop(epoch, l) {
                break;
            }
        }
        Ok(history)
    }
}
