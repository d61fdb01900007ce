#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtf::mask::build_feature_model;
use vtf::nn::{backward, objective, Activation, LayeredModel, LossKind};

pub const FD_STEP: f64 = 1e-6;
/// Denominator floor for the relative error, so entries that are zero up to
/// rounding are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-4;

pub struct GradientCase {
    pub model: LayeredModel,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub l2_lambda: f64,
}

/// A random model with 1 to 3 dense layers of at most 16 units, either
/// loss, random hidden activations and random data.
pub fn random_case(seed: u64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=6);
    let depth = rng.random_range(1..=3);
    let classification = rng.random_bool(0.5);
    let hidden = [Activation::Identity, Activation::Sigmoid, Activation::Relu];
    let mut widths: Vec<(usize, Activation)> = (1..depth)
        .map(|_| (rng.random_range(1..=16), hidden[rng.random_range(0..3)]))
        .collect();
    let (out, loss) = if classification {
        (Activation::Sigmoid, LossKind::BinaryCrossEntropy)
    } else {
        (Activation::Identity, LossKind::Mse)
    };
    widths.push((1, out));
    let mut model = LayeredModel::glorot(d, &widths, loss, rng.random()).unwrap();
    // zero biases put chained ReLUs exactly on their kink
    for layer in &mut model.layers {
        if let Some(b) = layer.biases.as_mut() {
            b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
    }
    let n = rng.random_range(3..=12);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let y = Array1::from_shape_fn(n, |_| {
        if classification {
            f64::from(rng.random_bool(0.5) as u8)
        } else {
            rng.random_range(-1.5..1.5)
        }
    });
    let l2_lambda = if rng.random_bool(0.5) { 0.0 } else { 0.01 };
    GradientCase { model, x, y, l2_lambda }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Worst relative error over every weight and bias entry.
pub fn parameter_gradient_error(case: &GradientCase) -> f64 {
    let grads = backward(&case.model, case.x.view(), case.y.view(), case.l2_lambda).unwrap();
    let eval = |m: &LayeredModel| objective(m, case.x.view(), case.y.view(), case.l2_lambda).unwrap();
    let mut worst = 0.0f64;
    for (k, layer) in case.model.layers.iter().enumerate() {
        let g = grads.layers[k].as_ref().expect("trainable layer");
        for idx in ndarray::indices(layer.weights.dim()) {
            let mut plus = case.model.clone();
            plus.layers[k].weights[idx] += FD_STEP;
            let mut minus = case.model.clone();
            minus.layers[k].weights[idx] -= FD_STEP;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(g.weights[idx], numeric));
        }
        if let (Some(b), Some(gb)) = (&layer.biases, &g.biases) {
            for i in 0..b.len() {
                let mut plus = case.model.clone();
                plus.layers[k].biases.as_mut().unwrap()[i] += FD_STEP;
                let mut minus = case.model.clone();
                minus.layers[k].biases.as_mut().unwrap()[i] -= FD_STEP;
                let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_STEP);
                worst = worst.max(relative_error(gb[i], numeric));
            }
        }
    }
    worst
}

/// Worst relative error of the mask gradient of a feature model built on
/// the case's model.
pub fn mask_gradient_error(case: &GradientCase, mask_seed: u64) -> f64 {
    let fm = build_feature_model(&case.model, mask_seed).unwrap();
    let analytic = fm.mask_gradient(case.x.view(), case.y.view(), case.l2_lambda).unwrap();
    let eval = |w: &Array1<f64>| {
        let mut f = fm.clone();
        f.mask.weights = w.clone();
        f.loss(case.x.view(), case.y.view()).unwrap() + case.l2_lambda * w.mapv(|v| v * v).sum()
    };
    let mut worst = 0.0f64;
    for j in 0..fm.mask.len() {
        let mut plus = fm.mask.weights.clone();
        plus[j] += FD_STEP;
        let mut minus = fm.mask.weights.clone();
        minus[j] -= FD_STEP;
        let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[j], numeric));
    }
    worst
}
