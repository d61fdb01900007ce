//! Reference importance methods: permutation importance, connection
//! weights and the Fisher score.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, Task};
use crate::error::{shape, Error, Result};
use crate::nn::{loss, LayeredModel, LossKind, Samples};
use crate::vtf::{Direction, ImportanceProfile, Method};

pub const DEFAULT_REPEATS: usize = 10;

/// Mean squared error (plain `1/N`) for regression models, binary cross
/// entropy for classifiers.
fn prediction_error(model: &LayeredModel, x: ndarray::ArrayView2<f64>, y: ArrayView1<f64>) -> Result<f64> {
    let pred = model.predict(x)?;
    match model.loss_kind {
        LossKind::Mse => Ok((&pred - &y).mapv(|e| e * e).mean().unwrap_or(0.0)),
        LossKind::BinaryCrossEntropy => loss(pred.view(), y, LossKind::BinaryCrossEntropy),
    }
}

/// Mean increase in prediction error after shuffling one column, over
/// `repeats` seeded shuffles per feature.
pub fn permutation_importance(
    model: &LayeredModel,
    eval: Samples<'_>,
    feature_names: Vec<String>,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceProfile> {
    if repeats < 1 {
        return Err(Error::Argument("permutation importance needs at least 1 repeat".into()));
    }
    let d = eval.x.ncols();
    if model.input_dim != d {
        return Err(shape("evaluation columns", model.input_dim, d));
    }
    let baseline = prediction_error(model, eval.x, eval.y)?;
    let scores = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut x = eval.x.to_owned();
            let mut column: Vec<f64> = eval.x.column(j).to_vec();
            let mut total = 0.0;
            for _ in 0..repeats {
                column.shuffle(&mut rng);
                x.column_mut(j).assign(&ArrayView1::from(&column));
                total += prediction_error(model, x.view(), eval.y)? - baseline;
            }
            Ok(total / repeats as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    ImportanceProfile::new(Method::Permutation, scores, Direction::HigherIsMoreImportant, feature_names)
}

/// Sum over all input-to-output paths of the product of weights along the
/// path, i.e. the row sums of `W1 W2 ... WL`. Activations are ignored.
pub fn connection_weights(model: &LayeredModel, feature_names: Vec<String>) -> Result<ImportanceProfile> {
    let mut layers = model.layers.iter();
    let first = layers
        .next()
        .ok_or_else(|| Error::Argument("connection weights of a model with no layers".into()))?;
    let product: Array2<f64> = layers.fold(first.weights.clone(), |acc, l| acc.dot(&l.weights));
    let scores = product.sum_axis(Axis(1)).to_vec();
    ImportanceProfile::new(Method::ConnectionWeights, scores, Direction::AbsHigherIsMoreImportant, feature_names)
}

/// Between-class over within-class variance per feature:
/// `sum_k n_k (mu_jk - mu_j)^2 / sum_k n_k var_jk`. A feature that varies
/// only between classes gets `+inf` and a note.
pub fn fisher_score(dataset: &Dataset) -> Result<ImportanceProfile> {
    if dataset.task != Task::BinaryClassification {
        return Err(Error::Argument("Fisher score needs a classification dataset".into()));
    }
    let classes: Vec<Vec<usize>> = [0.0, 1.0]
        .iter()
        .map(|&c| (0..dataset.n_samples()).filter(|&i| dataset.target[i] == c).collect())
        .collect();
    if let Some(small) = classes.iter().position(|idx| idx.len() < 2) {
        return Err(Error::Argument(format!(
            "Fisher score needs at least 2 samples per class; class {small} has {}",
            classes[small].len()
        )));
    }
    let mut notes = Vec::new();
    let scores = dataset
        .features
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(j, col)| {
            let overall = col.mean().unwrap();
            let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut between = 0.0;
            let mut within = 0.0;
            for idx in &classes {
                let values: Array1<f64> = col.select(Axis(0), idx);
                let n_k = idx.len() as f64;
                let mean = values.mean().unwrap();
                between += n_k * (mean - overall).powi(2);
                within += n_k * values.var(0.0);
            }
            // rounding in the class means can leave a tiny nonzero variance
            let tiny = (1e-10 * scale).powi(2) * dataset.n_samples() as f64;
            if within <= tiny {
                if between <= tiny {
                    return 0.0;
                }
                notes.push(format!("feature {} has zero within-class variance", dataset.feature_names[j]));
                return f64::INFINITY;
            }
            between / within
        })
        .collect();
    let mut profile = ImportanceProfile::new(Method::FisherScore, scores, Direction::HigherIsMoreImportant, dataset.feature_names.clone())?;
    profile.notes = notes;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_linear;
    use crate::nn::{Activation, DenseLayer};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    fn linear(coefs: &[f64]) -> LayeredModel {
        let w = Array2::from_shape_vec((coefs.len(), 1), coefs.to_vec()).unwrap();
        let layer = DenseLayer::new(w, Some(array![0.0]), Activation::Identity).unwrap();
        LayeredModel::new(coefs.len(), vec![layer], LossKind::Mse).unwrap()
    }

    #[test]
    fn constant_column_has_zero_importance() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]];
        let y = array![1.0, 2.0, 3.0, 4.0];
        let p = permutation_importance(&linear(&[1.0, 0.7]), Samples::new(x.view(), y.view()).unwrap(), names(2), 5, 3).unwrap();
        assert_eq!(p.scores[1], 0.0);
        assert!(p.scores[0] > 0.0);
    }

    #[test]
    fn ignored_feature_scores_zero() {
        let ds = synth_linear(200, &[1.0, 0.0], 0.0, 4).unwrap();
        let p = permutation_importance(&linear(&[1.0, 0.0]), ds.samples(), names(2), 10, 3).unwrap();
        assert!(p.scores[1].abs() < 1e-12);
        assert_eq!(p.ranking, vec![0, 1]);
    }

    #[test]
    fn perfect_fit_permutation_error_is_twice_the_variance() {
        // y = x1 exactly: shuffled error is mean((x - x')^2) ~ 2 Var(x)
        let ds = synth_linear(4000, &[1.0], 0.0, 5).unwrap();
        let p = permutation_importance(&linear(&[1.0]), ds.samples(), names(1), 10, 3).unwrap();
        let var = ds.features.column(0).var(0.0);
        assert!((p.scores[0] - 2.0 * var).abs() < 0.1, "{} vs {}", p.scores[0], 2.0 * var);
    }

    #[test]
    fn permutation_is_seeded() {
        let ds = synth_linear(100, &[0.5, 1.0, -0.2], 0.1, 6).unwrap();
        let m = linear(&[0.5, 1.0, -0.2]);
        let a = permutation_importance(&m, ds.samples(), names(3), 3, 9).unwrap();
        let b = permutation_importance(&m, ds.samples(), names(3), 3, 9).unwrap();
        assert_eq!(a, b);
        assert!(permutation_importance(&m, ds.samples(), names(3), 0, 9).is_err());
    }

    #[test]
    fn connection_weights_of_one_layer_are_the_weights() {
        let p = connection_weights(&linear(&[0.5, -2.0, 1.0]), names(3)).unwrap();
        assert_eq!(p.scores, vec![0.5, -2.0, 1.0]);
        assert_eq!(p.ranking, vec![1, 2, 0]);
        assert_eq!(p.direction, Direction::AbsHigherIsMoreImportant);
    }

    #[test]
    fn connection_weights_of_two_layers() {
        let l1 = DenseLayer::new(array![[1.0, 2.0], [3.0, -1.0]], None, Activation::Relu).unwrap();
        let l2 = DenseLayer::new(array![[0.5], [2.0]], None, Activation::Identity).unwrap();
        let m = LayeredModel::new(2, vec![l1, l2], LossKind::Mse).unwrap();
        assert_eq!(connection_weights(&m, names(2)).unwrap().scores, vec![4.5, -0.5]);
        let empty = LayeredModel::new(2, vec![], LossKind::Mse).unwrap();
        assert!(connection_weights(&empty, names(2)).is_err());
    }

    fn path_sum(weights: &[Array2<f64>], node: usize, depth: usize) -> f64 {
        if depth == weights.len() {
            return 1.0;
        }
        let w = &weights[depth];
        (0..w.ncols()).map(|k| w[[node, k]] * path_sum(weights, k, depth + 1)).sum()
    }

    #[test]
    fn connection_weights_match_path_enumeration() {
        let m = LayeredModel::glorot(13, &[(13, Activation::Sigmoid), (1, Activation::Identity)], LossKind::Mse, 8).unwrap();
        let deep = LayeredModel::glorot(4, &[(3, Activation::Relu), (5, Activation::Relu), (1, Activation::Identity)], LossKind::Mse, 9).unwrap();
        for model in [m, deep] {
            let ws: Vec<Array2<f64>> = model.layers.iter().map(|l| l.weights.clone()).collect();
            let p = connection_weights(&model, names(model.input_dim)).unwrap();
            for j in 0..model.input_dim {
                assert!((p.scores[j] - path_sum(&ws, j, 0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn scaling_a_layer_scales_scores() {
        let mut m = LayeredModel::glorot(5, &[(4, Activation::Sigmoid), (1, Activation::Identity)], LossKind::Mse, 10).unwrap();
        let before = connection_weights(&m, names(5)).unwrap();
        m.layers[0].weights *= 3.0;
        let after = connection_weights(&m, names(5)).unwrap();
        for (a, b) in before.scores.iter().zip(&after.scores) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
        assert_eq!(before.ranking, after.ranking);
    }

    fn classification(features: Array2<f64>, target: Array1<f64>) -> Dataset {
        let d = features.ncols();
        Dataset::new(features, target, names(d), Task::BinaryClassification).unwrap()
    }

    #[test]
    fn fisher_examples() {
        let x = array![[7.0, 0.0, 1.0], [7.0, 0.0, 2.0], [7.0, 1.0, 2.0], [7.0, 1.0, 4.0]];
        let ds = classification(x, array![0.0, 0.0, 1.0, 1.0]);
        let p = fisher_score(&ds).unwrap();
        assert_eq!(p.scores[0], 0.0);
        assert_eq!(p.scores[1], f64::INFINITY);
        // class means 1.5 and 3, overall 2.25; variances 0.25 and 1
        let want = (2.0 * 0.75f64.powi(2) * 2.0) / (2.0 * 0.25 + 2.0 * 1.0);
        assert!((p.scores[2] - want).abs() < 1e-12);
        assert_eq!(p.ranking[0], 1);
        assert_eq!(p.notes.len(), 1);
    }

    #[test]
    fn fisher_preconditions() {
        let x = array![[1.0], [2.0], [3.0]];
        assert!(fisher_score(&classification(x.clone(), array![0.0, 0.0, 1.0])).is_err());
        let reg = Dataset::new(x, array![0.0, 1.0, 2.0], names(1), Task::Regression).unwrap();
        assert!(fisher_score(&reg).is_err());
    }

    #[test]
    fn fisher_gaussian_columns_match_population_ratio() {
        // two classes N(0,1) and N(delta,1), equal sizes: ratio -> delta^2/4
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 20_000;
        let delta = 1.5;
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let y = Array1::from_shape_fn(n, |i| (i % 2) as f64);
        let x = Array2::from_shape_fn((n, 1), |(i, _)| rng.sample(normal) + delta * y[i]);
        let p = fisher_score(&classification(x, y)).unwrap();
        assert!((p.scores[0] - delta * delta / 4.0).abs() < 0.03, "{}", p.scores[0]);
    }

    proptest! {
        #[test]
        fn fisher_ignores_positive_affine_maps(seed in 0u64..1000, a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((12, 2), |_| rng.random_range(-2.0..2.0));
            let y = Array1::from_shape_fn(12, |i| (i % 2) as f64);
            let p = fisher_score(&classification(x.clone(), y.clone())).unwrap();
            let q = fisher_score(&classification(x.mapv(|v| a * v + b), y)).unwrap();
            for (s, t) in p.scores.iter().zip(&q.scores) {
                prop_assert!((s - t).abs() <= 1e-9 * s.abs().max(1.0));
            }
        }
    }
}
