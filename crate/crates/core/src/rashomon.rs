//! Repeated mask retraining. Each retrain starts from a fresh random mask
//! and stops at the first epoch whose training loss is within `epsilon` of
//! the base model's; the accepted masks form the weight matrix every
//! importance method reads.

use std::path::Path;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mask::{apply_mask, build_feature_model};
use crate::nn::{LayeredModel, TrainConfig};

/// Loss tolerance defining the Rashomon set around the base model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    /// `epsilon = factor * base_loss`
    Relative(f64),
    Absolute(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(0.01)
    }
}

impl Tolerance {
    pub fn epsilon(self, base_loss: f64) -> f64 {
        match self {
            Tolerance::Relative(f) => f * base_loss.abs(),
            Tolerance::Absolute(e) => e,
        }
    }

    fn value(self) -> f64 {
        match self {
            Tolerance::Relative(v) | Tolerance::Absolute(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RashomonConfig {
    pub tolerance: Tolerance,
    pub max_epochs_per_retrain: usize,
    /// `None` picks [`default_retrains`] for the feature count.
    pub n_retrains: Option<usize>,
    pub base_seed: u64,
    /// Batch size and optimizer settings for the mask; `epochs` is ignored
    /// in favour of `max_epochs_per_retrain` and `seed` is replaced per
    /// retrain.
    pub train_config: TrainConfig,
}

impl Default for RashomonConfig {
    fn default() -> Self {
        RashomonConfig {
            tolerance: Tolerance::default(),
            max_epochs_per_retrain: 1000,
            n_retrains: None,
            base_seed: crate::data::DEFAULT_SEED,
            train_config: TrainConfig::default(),
        }
    }
}

impl RashomonConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = self.tolerance.value();
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("epsilon must be a finite nonnegative number, got {eps}")));
        }
        if self.max_epochs_per_retrain < 1 {
            return Err(Error::Config("max_epochs_per_retrain must be >= 1".into()));
        }
        if self.n_retrains == Some(0) {
            return Err(Error::Config("n_retrains must be >= 1".into()));
        }
        self.train_config.validate()
    }

    pub fn retrains_for(&self, d: usize) -> usize {
        self.n_retrains.unwrap_or_else(|| default_retrains(d))
    }
}

/// 250 retrains for up to 30 features, and never fewer than `d + 10` so the
/// contribution system stays overdetermined.
pub fn default_retrains(d: usize) -> usize {
    let base = if d <= 30 { 250 } else { 0 };
    base.max(d + 10)
}

/// `loss <= base_loss + epsilon`, inclusive.
pub fn in_rashomon(loss: f64, base_loss: f64, epsilon: f64) -> bool {
    loss <= base_loss + epsilon
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainRecord {
    #[serde(rename = "index")]
    pub retrain_index: usize,
    pub seed: u64,
    #[serde(deserialize_with = "crate::util::nan_if_null")]
    pub final_loss: f64,
    pub epochs_used: usize,
    #[serde(rename = "mask")]
    pub final_mask: Vec<f64>,
    #[serde(default = "accepted_default")]
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn accepted_default() -> bool {
    true
}

/// Trains one feature model with seed `base_seed + index`. Divergence is
/// reported as a rejected record, never as an error.
pub fn retrain_once(base: &LayeredModel, train: &Dataset, config: &RashomonConfig, base_loss: f64, index: usize) -> RetrainRecord {
    let seed = config.base_seed.wrapping_add(index as u64);
    let epsilon = config.tolerance.epsilon(base_loss);
    let rejected = |diagnostic: String, mask: Vec<f64>| RetrainRecord {
        retrain_index: index,
        seed,
        final_loss: f64::NAN,
        epochs_used: 0,
        final_mask: mask,
        accepted: false,
        diagnostic: Some(diagnostic),
    };
    let mut fm = match build_feature_model(base, seed) {
        Ok(fm) => fm,
        Err(e) => return rejected(e.to_string(), Vec::new()),
    };
    let cfg = TrainConfig {
        seed,
        ..config.train_config.clone()
    };
    let mut hit = false;
    let outcome = fm.train_until(train.samples(), &cfg, config.max_epochs_per_retrain, |_, loss| {
        hit = in_rashomon(loss, base_loss, epsilon);
        hit
    });
    match outcome {
        Ok(history) => RetrainRecord {
            retrain_index: index,
            seed,
            final_loss: history.final_loss,
            epochs_used: history.epochs(),
            final_mask: fm.mask_weights(),
            accepted: hit,
            diagnostic: (!hit).then(|| format!("loss {:.6e} above target after {} epochs", history.final_loss, history.epochs())),
        },
        Err(e) => rejected(e.to_string(), fm.mask_weights()),
    }
}

/// Accepted mask vectors, one row per successful retrain in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    #[serde(deserialize_with = "crate::util::nan_if_null")]
    pub base_loss: f64,
    #[serde(deserialize_with = "crate::util::nan_if_null")]
    pub epsilon: f64,
    pub feature_names: Vec<String>,
    /// Retrains attempted, accepted or not.
    #[serde(default)]
    pub attempted: usize,
    pub records: Vec<RetrainRecord>,
}

impl WeightMatrix {
    /// Wraps raw mask rows (e.g. from another tool) as a weight matrix.
    pub fn from_rows(rows: &[Vec<f64>], feature_names: Vec<String>) -> Result<Self> {
        let d = feature_names.len();
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if r.len() != d {
                    return Err(crate::error::shape(format!("weight row {i}"), d, r.len()));
                }
                Ok(RetrainRecord {
                    retrain_index: i,
                    seed: i as u64,
                    final_loss: f64::NAN,
                    epochs_used: 0,
                    final_mask: r.clone(),
                    accepted: true,
                    diagnostic: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightMatrix {
            base_loss: f64::NAN,
            epsilon: f64::NAN,
            feature_names,
            attempted: rows.len(),
            records,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.records.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// The `N x d` matrix of mask weights.
    pub fn rows(&self) -> Array2<f64> {
        let d = self.n_features();
        let mut m = Array2::zeros((self.records.len(), d));
        for (mut row, rec) in m.axis_iter_mut(Axis(0)).zip(&self.records) {
            row.assign(&ndarray::ArrayView1::from(&rec.final_mask[..]));
        }
        m
    }

    /// Keeps only the first `n` rows.
    pub fn truncated(&self, n: usize) -> WeightMatrix {
        WeightMatrix {
            records: self.records.iter().take(n).cloned().collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wm: WeightMatrix = serde_json::from_str(text)?;
        let d = wm.n_features();
        if let Some(r) = wm.records.iter().find(|r| r.final_mask.len() != d) {
            return Err(crate::error::shape(format!("record {} mask", r.retrain_index), d, r.final_mask.len()));
        }
        Ok(wm)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Runs `n_retrains` independent retrains (in parallel on up to `jobs`
/// threads, or serially when `jobs == Some(1)`) and collects the accepted
/// ones. Output is identical regardless of thread count. `progress` sees
/// every record, in completion order.
pub fn explore(
    base: &LayeredModel,
    train: &Dataset,
    config: &RashomonConfig,
    jobs: Option<usize>,
    progress: &(dyn Fn(&RetrainRecord) + Sync),
) -> Result<WeightMatrix> {
    config.validate()?;
    if train.n_features() != base.input_dim {
        return Err(crate::error::shape("dataset columns", base.input_dim, train.n_features()));
    }
    let base_loss = base.evaluate(train.features.view(), train.target.view())?;
    let epsilon = config.tolerance.epsilon(base_loss);
    let n = config.retrains_for(train.n_features());

    let run = |i: usize| {
        let rec = retrain_once(base, train, config, base_loss, i);
        progress(&rec);
        rec
    };
    let mut records: Vec<RetrainRecord> = match jobs {
        Some(1) => (0..n).map(run).collect(),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| (0..n).into_par_iter().map(run).collect()),
        None => (0..n).into_par_iter().map(run).collect(),
    };
    records.sort_by_key(|r| r.retrain_index);

    // replay every accepted mask through the plain base model
    for rec in records.iter_mut().filter(|r| r.accepted) {
        let masked = apply_mask(ndarray::ArrayView1::from(&rec.final_mask[..]), train.features.view())?;
        let replay = base.evaluate(masked.view(), train.target.view())?;
        if !in_rashomon(replay, base_loss, epsilon) {
            rec.accepted = false;
            rec.diagnostic = Some(format!("replayed loss {replay:.6e} outside the Rashomon set"));
        }
    }

    let (accepted, rejected): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.accepted);
    if accepted.is_empty() {
        return Err(Error::Exploration {
            attempted: n,
            diagnostics: rejected
                .iter()
                .map(|r| format!("retrain {}: {}", r.retrain_index, r.diagnostic.as_deref().unwrap_or("rejected")))
                .collect(),
        });
    }
    Ok(WeightMatrix {
        base_loss,
        epsilon,
        feature_names: train.feature_names.clone(),
        attempted: n,
        records: accepted,
    })
}

/// Column means of every prefix: row `k` averages rows `0..=k`.
pub fn stability_curve(matrix: &WeightMatrix) -> Result<Array2<f64>> {
    let rows = matrix.rows();
    if rows.nrows() == 0 {
        return Err(Error::Argument("stability curve of an empty weight matrix".into()));
    }
    let mut out = Array2::zeros(rows.raw_dim());
    let mut sum = ndarray::Array1::<f64>::zeros(rows.ncols());
    for (k, row) in rows.axis_iter(Axis(0)).enumerate() {
        sum += &row;
        out.row_mut(k).assign(&(&sum / (k + 1) as f64));
    }
    Ok(out)
}
