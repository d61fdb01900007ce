//! Drop-and-retrain evaluation: remove the least important fraction of
//! features per a ranking, fit a fresh model on what is left and record the
//! test metric.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::nn::{train, LayeredModel, ModelSpec, TrainConfig};
use crate::vtf::{select_unimportant, ImportanceProfile, Method, DEFAULT_THRESHOLD};

/// 0.1, 0.2, ..., 0.9.
pub fn default_fractions() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn default_independent_training() -> TrainConfig {
    TrainConfig {
        epochs: 150,
        batch_size: 100,
        ..TrainConfig::default()
    }
}

fn default_model() -> ModelSpec {
    ModelSpec::Linear
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// Settings for the independent models fitted on each feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default = "default_independent_training")]
    pub train: TrainConfig,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    /// Cut used for the one-shot VTF selection in [`compare_methods`].
    #[serde(default = "default_threshold")]
    pub vtf_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model: default_model(),
            train: default_independent_training(),
            fractions: default_fractions(),
            vtf_threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.fractions.is_empty() {
            return Err(Error::Config("no fractions to evaluate".into()));
        }
        if self.fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Config("fractions must lie strictly between 0 and 1".into()));
        }
        if self.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("fractions must be strictly increasing".into()));
        }
        if !(self.vtf_threshold > 0.0) {
            return Err(Error::Config("VTF threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Mean squared error, lower is better.
    Mse,
    /// Fraction of correct 0/1 predictions at a 0.5 cut, higher is better.
    Accuracy,
}

impl MetricKind {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => MetricKind::Mse,
            Task::BinaryClassification => MetricKind::Accuracy,
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == MetricKind::Accuracy
    }
}

/// Number of features removed at `fraction`: `floor(fraction * d)`.
pub fn features_to_drop(d: usize, fraction: f64) -> usize {
    // the epsilon keeps 0.3 * 10 from landing on 2.9999999999999996
    (fraction * d as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduced {
    pub dataset: Dataset,
    /// Removed feature indices, least important first.
    pub removed: Vec<usize>,
    /// Remaining indices in original column order.
    pub kept: Vec<usize>,
}

fn check_ranking(ranking: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    if ranking.len() != d || ranking.iter().any(|&j| j >= d || std::mem::replace(&mut seen[j], true)) {
        return Err(Error::Argument(format!("ranking is not a permutation of 0..{d}")));
    }
    Ok(())
}

/// Removes the `floor(fraction * d)` least important features, where
/// `ranking` lists feature indices most important first.
pub fn drop_features(dataset: &Dataset, ranking: &[usize], fraction: f64) -> Result<Reduced> {
    let d = dataset.n_features();
    check_ranking(ranking, d)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let k = features_to_drop(d, fraction);
    if k >= d {
        return Err(Error::Argument(format!("fraction {fraction} would remove all {d} features")));
    }
    let removed: Vec<usize> = ranking[d - k..].iter().rev().copied().collect();
    Ok(without(dataset, removed))
}

fn without(dataset: &Dataset, removed: Vec<usize>) -> Reduced {
    let kept: Vec<usize> = (0..dataset.n_features()).filter(|j| !removed.contains(j)).collect();
    Reduced {
        dataset: dataset.select_columns(&kept),
        removed,
        kept,
    }
}

/// Test metric of `model`: plain MSE for regression, accuracy for
/// classification.
pub fn test_metric(model: &LayeredModel, test: &Dataset) -> Result<f64> {
    let pred = model.predict(test.features.view())?;
    Ok(match MetricKind::for_task(test.task) {
        MetricKind::Mse => (&pred - &test.target).mapv(|e| e * e).mean().unwrap(),
        MetricKind::Accuracy => {
            let hits = pred.iter().zip(&test.target).filter(|(p, y)| (**p >= 0.5) == (**y == 1.0)).count();
            hits as f64 / test.n_samples() as f64
        }
    })
}

/// Trains a fresh model from `config` on `train` and scores it on `test`.
pub fn independent_fit(train_set: &Dataset, test: &Dataset, config: &EvalConfig) -> Result<f64> {
    if train_set.n_features() != test.n_features() {
        return Err(crate::error::shape("test columns", train_set.n_features(), test.n_features()));
    }
    let mut model = config.model.build(train_set.n_features(), config.train.seed)?;
    train(&mut model, train_set.samples(), None, &config.train)?;
    test_metric(&model, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub n_removed: usize,
    /// `None` marks a fraction whose fit failed numerically.
    pub metric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCurve {
    pub method: String,
    pub metric_kind: MetricKind,
    /// Metric with every feature kept.
    pub baseline: f64,
    pub curve: Vec<CurvePoint>,
    pub independent_model: EvalConfig,
}

impl SelectionCurve {
    pub fn fractions(&self) -> Vec<f64> {
        self.curve.iter().map(|p| p.fraction).collect()
    }

    pub fn metrics(&self) -> Vec<Option<f64>> {
        self.curve.iter().map(|p| p.metric).collect()
    }

    pub fn metric_at(&self, fraction: f64) -> Option<f64> {
        self.curve.iter().find(|p| (p.fraction - fraction).abs() < 1e-12).and_then(|p| p.metric)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn curve_with_baseline(
    train_set: &Dataset,
    test: &Dataset,
    profile: &ImportanceProfile,
    config: &EvalConfig,
    baseline: f64,
) -> Result<SelectionCurve> {
    check_ranking(&profile.ranking, train_set.n_features())?;
    let curve = config
        .fractions
        .par_iter()
        .map(|&fraction| {
            let k = features_to_drop(train_set.n_features(), fraction);
            let tr = match drop_features(train_set, &profile.ranking, fraction) {
                Ok(r) => r,
                Err(e) => {
                    return Ok(CurvePoint {
                        fraction,
                        n_removed: k,
                        metric: None,
                        error: Some(e.to_string()),
                    })
                }
            };
            let te = test.select_columns(&tr.kept);
            match independent_fit(&tr.dataset, &te, config) {
                Ok(m) => Ok(CurvePoint {
                    fraction,
                    n_removed: k,
                    metric: Some(m),
                    error: None,
                }),
                Err(e @ (Error::Diverged { .. } | Error::NonFiniteGradient { .. })) => Ok(CurvePoint {
                    fraction,
                    n_removed: k,
                    metric: None,
                    error: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionCurve {
        method: profile.method.to_string(),
        metric_kind: MetricKind::for_task(test.task),
        baseline,
        curve,
        independent_model: config.clone(),
    })
}

/// Metric after dropping each configured fraction of least important
/// features. Fractions that remove every feature or diverge leave a gap.
pub fn selection_curve(train_set: &Dataset, test: &Dataset, profile: &ImportanceProfile, config: &EvalConfig) -> Result<SelectionCurve> {
    config.validate()?;
    let baseline = independent_fit(train_set, test, config)?;
    curve_with_baseline(train_set, test, profile, config, baseline)
}

/// A profile to compare, with the time it took to compute if known.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub profile: ImportanceProfile,
    pub explain_time_ms: Option<f64>,
}

impl From<ImportanceProfile> for Candidate {
    fn from(profile: ImportanceProfile) -> Self {
        Candidate {
            profile,
            explain_time_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub name: String,
    pub baseline: f64,
    pub curve: Vec<CurvePoint>,
    /// Time spent on this method's curve.
    pub wall_time_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain_time_ms: Option<f64>,
}

/// Metric after removing every feature with `t > threshold` in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VtfSelection {
    pub threshold: f64,
    pub unimportant: Vec<String>,
    pub kept: Vec<String>,
    pub metric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset_hash: String,
    pub metric_kind: MetricKind,
    pub baseline: f64,
    pub methods: Vec<MethodResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vtf_selection: Option<VtfSelection>,
    pub independent_model: EvalConfig,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Flat `method,fraction,n_removed,metric` rows; fraction 0 is the
    /// baseline and an empty metric is a gap.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,fraction,n_removed,metric\n");
        for m in &self.methods {
            out.push_str(&format!("{},0.0,0,{:?}\n", m.name, m.baseline));
            for p in &m.curve {
                let metric = p.metric.map(|v| format!("{v:?}")).unwrap_or_default();
                out.push_str(&format!("{},{:?},{},{}\n", m.name, p.fraction, p.n_removed, metric));
            }
        }
        out
    }
}

/// One-shot VTF selection on an already fitted pair of splits.
pub fn vtf_selection(train_set: &Dataset, test: &Dataset, vtf: &ImportanceProfile, config: &EvalConfig, baseline: f64) -> Result<VtfSelection> {
    let removed = select_unimportant(vtf, config.vtf_threshold)?;
    let reduced = without(train_set, removed);
    let names = |idx: &[usize]| idx.iter().map(|&j| train_set.feature_names[j].clone()).collect::<Vec<_>>();
    let (metric, note) = if reduced.removed.is_empty() {
        (Some(baseline), Some("no feature exceeds the threshold; metric is the full-feature baseline".into()))
    } else if reduced.kept.is_empty() {
        (None, Some("every feature exceeds the threshold".into()))
    } else {
        let te = test.select_columns(&reduced.kept);
        (Some(independent_fit(&reduced.dataset, &te, config)?), None)
    };
    Ok(VtfSelection {
        threshold: config.vtf_threshold,
        unimportant: names(&reduced.removed),
        kept: names(&reduced.kept),
        metric,
        note,
    })
}

/// One curve per candidate plus, when a VTF profile is among them, the
/// one-shot VTF selection result.
pub fn compare_methods(train_set: &Dataset, test: &Dataset, candidates: &[Candidate], config: &EvalConfig) -> Result<ComparisonReport> {
    if candidates.is_empty() {
        return Err(Error::Argument("nothing to compare".into()));
    }
    config.validate()?;
    let baseline = independent_fit(train_set, test, config)?;
    let mut methods = Vec::with_capacity(candidates.len());
    for c in candidates {
        let start = Instant::now();
        let curve = curve_with_baseline(train_set, test, &c.profile, config, baseline)?;
        methods.push(MethodResult {
            name: curve.method,
            baseline,
            curve: curve.curve,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            explain_time_ms: c.explain_time_ms,
        });
    }
    let vtf_selection = candidates
        .iter()
        .find(|c| c.profile.method == Method::Vtf)
        .map(|c| vtf_selection(train_set, test, &c.profile, config, baseline))
        .transpose()?;
    Ok(ComparisonReport {
        dataset_hash: train_set.content_hash(),
        metric_kind: MetricKind::for_task(test.task),
        baseline,
        methods,
        vtf_selection,
        independent_model: config.clone(),
    })
}

#[derive(Deserialize)]
struct ExternalRow {
    name: String,
    rank: f64,
}

/// Reads a `name,rank` CSV (rank 1 = most important) produced by another
/// tool. Every feature must appear exactly once.
pub fn load_external_ranking(path: &Path, method_name: &str, feature_names: &[String]) -> Result<ImportanceProfile> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))),
        _ => Error::Csv(e),
    })?;
    let index: HashMap<&str, usize> = feature_names.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
    let mut ranks: Vec<Option<f64>> = vec![None; feature_names.len()];
    for row in reader.deserialize() {
        let row: ExternalRow = row?;
        let j = *index
            .get(row.name.as_str())
            .ok_or_else(|| Error::Schema(format!("external ranking names unknown feature {:?}", row.name)))?;
        if ranks[j].replace(row.rank).is_some() {
            return Err(Error::Schema(format!("external ranking lists {:?} twice", row.name)));
        }
    }
    if let Some(j) = ranks.iter().position(Option::is_none) {
        return Err(Error::Schema(format!("external ranking is missing feature {:?}", feature_names[j])));
    }
    let mut order: Vec<usize> = (0..feature_names.len()).collect();
    order.sort_by(|&a, &b| ranks[a].unwrap().total_cmp(&ranks[b].unwrap()));
    ImportanceProfile::from_ranking(Method::External(method_name.to_string()), &order, feature_names.to_vec())
}
