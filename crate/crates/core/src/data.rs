//! Datasets: CSV ingestion, seeded train/test splits, train-only
//! standardization and synthetic linear generators with known ground truth.

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{shape, Error, Result};
use crate::nn::Samples;

pub const DEFAULT_SEED: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    BinaryClassification,
}

/// Per-feature z-score parameters fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns whose training std was zero; they are centered only.
    pub constant: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub target: Array1<f64>,
    pub feature_names: Vec<String>,
    pub task: Task,
    pub standardization: Option<Standardization>,
    /// Generating coefficients, for synthetic data only.
    pub ground_truth: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, target: Array1<f64>, feature_names: Vec<String>, task: Task) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.ncols() == 0 {
            return Err(Error::Argument("dataset needs at least one feature".into()));
        }
        if target.len() != features.nrows() {
            return Err(shape("dataset target", features.nrows(), target.len()));
        }
        if feature_names.len() != features.ncols() {
            return Err(shape("feature names", features.ncols(), feature_names.len()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Schema(format!("duplicate feature name {dup:?}")));
        }
        if task == Task::BinaryClassification && target.iter().any(|&t| t != 0.0 && t != 1.0) {
            return Err(Error::Schema("classification targets must be 0 or 1".into()));
        }
        Ok(Dataset {
            features,
            target,
            feature_names,
            task,
            standardization: None,
            ground_truth: None,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn samples(&self) -> Samples<'_> {
        Samples {
            x: self.features.view(),
            y: self.target.view(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            target: self.target.select(Axis(0), indices),
            ..self.clone()
        }
    }

    /// Columns at `indices`, in that order. Ground truth follows the columns.
    pub fn select_columns(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(1), indices),
            target: self.target.clone(),
            feature_names: indices.iter().map(|&j| self.feature_names[j].clone()).collect(),
            task: self.task,
            standardization: self.standardization.as_ref().map(|s| Standardization {
                mean: indices.iter().map(|&j| s.mean[j]).collect(),
                std: indices.iter().map(|&j| s.std[j]).collect(),
                constant: indices.iter().map(|&j| s.constant[j]).collect(),
            }),
            ground_truth: self.ground_truth.as_ref().map(|g| indices.iter().map(|&j| g[j]).collect()),
        }
    }

    /// SHA-256 over names, shape and the little-endian bytes of every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.feature_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        h.update((self.n_samples() as u64).to_le_bytes());
        h.update((self.n_features() as u64).to_le_bytes());
        for v in self.features.iter().chain(self.target.iter()) {
            h.update(v.to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

/// Which column of a CSV holds the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Defaults to the last column.
    #[serde(default)]
    pub target_column: Option<TargetColumn>,
    #[serde(default = "yes")]
    pub has_header: bool,
    #[serde(default = "regression")]
    pub task: Task,
}

fn yes() -> bool {
    true
}

fn regression() -> Task {
    Task::Regression
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            target_column: None,
            has_header: true,
            task: Task::Regression,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Option<Vec<String>> = if schema.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = header.as_ref().map(Vec::len);
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based row numbers counting the header line
        let row_no = r + 1 + usize::from(schema.has_header);
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row: row_no,
                column: record.len(),
                message: format!("expected {w} fields"),
            });
        }
        let mut values = Vec::with_capacity(w);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: c + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = width.unwrap_or(0);
    if width < 2 {
        return Err(Error::Schema("need at least one feature column and a target column".into()));
    }
    let names: Vec<String> = header.unwrap_or_else(|| (0..width).map(|j| format!("x{}", j + 1)).collect());
    let target_idx = match &schema.target_column {
        None => width - 1,
        Some(TargetColumn::Index(i)) if *i < width => *i,
        Some(TargetColumn::Index(i)) => {
            return Err(Error::Schema(format!("target column {i} out of range ({width} columns)")))
        }
        Some(TargetColumn::Name(n)) => names
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Schema(format!("missing target column {n:?}")))?,
    };

    let n = rows.len();
    let d = width - 1;
    let mut features = Array2::zeros((n, d));
    let mut target = Array1::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        target[i] = row[target_idx];
        for (j, &v) in row.iter().enumerate().filter(|&(j, _)| j != target_idx).map(|(_, v)| v).enumerate() {
            features[[i, j]] = v;
        }
    }
    let feature_names = names
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| j != target_idx)
        .map(|(_, n)| n)
        .collect();
    Dataset::new(features, target, feature_names, schema.task)
}

/// Writes features then the target as the last column, with a header.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>, target_name: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push(target_name);
    w.write_record(&header)?;
    for (row, t) in dataset.features.rows().into_iter().zip(dataset.target.iter()) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{t:?}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded shuffle then split; the first `round(ratio * n)` shuffled rows
/// train. Both sides keep at least one sample.
pub fn split(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(dataset.n_samples(), ratio, seed)?;
    Ok((dataset.select_rows(&train_idx), dataset.select_rows(&test_idx)))
}

pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} not in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Argument(format!("cannot split {n} sample(s)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Z-scores both splits with statistics from `train` alone.
pub fn standardize(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
    if train.n_features() != test.n_features() {
        return Err(shape("test columns", train.n_features(), test.n_features()));
    }
    let n = train.n_samples() as f64;
    let mean = train.features.mean_axis(Axis(0)).ok_or(Error::EmptyDataset)?;
    let var = train
        .features
        .axis_iter(Axis(1))
        .zip(mean.iter())
        .map(|(col, m)| col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n);
    let mut std = Vec::with_capacity(train.n_features());
    let mut constant = Vec::with_capacity(train.n_features());
    for v in var {
        let s = v.sqrt();
        let c = !(s > 1e-12);
        constant.push(c);
        std.push(if c { 1.0 } else { s });
    }
    let params = Standardization {
        mean: mean.to_vec(),
        std,
        constant,
    };
    Ok((apply_standardization(train, &params), apply_standardization(test, &params)))
}

pub fn apply_standardization(dataset: &Dataset, params: &Standardization) -> Dataset {
    let mut out = dataset.clone();
    for (j, mut col) in out.features.axis_iter_mut(Axis(1)).enumerate() {
        let (m, s) = (params.mean[j], params.std[j]);
        col.mapv_inplace(|v| (v - m) / s);
    }
    out.standardization = Some(params.clone());
    out
}

/// `y = sum_j c_j x_j + noise` with i.i.d. standard normal features. The
/// coefficients are stored as ground truth.
pub fn synth_linear(n: usize, coefficients: &[f64], noise_std: f64, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::Argument(format!("synthetic datasets need n >= 10, got {n}")));
    }
    if coefficients.is_empty() {
        return Err(Error::Argument("no coefficients".into()));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::Argument("noise_std must be nonnegative".into()));
    }
    let d = coefficients.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut rng));
    let coef = Array1::from(coefficients.to_vec());
    let mut target = features.dot(&coef);
    if noise_std > 0.0 {
        target.mapv_inplace(|t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            t + noise_std * e
        });
    }
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    let mut ds = Dataset::new(features, target, names, Task::Regression)?;
    ds.ground_truth = Some(coefficients.to_vec());
    Ok(ds)
}

/// Two-class data: each feature is Gaussian with a class-dependent mean
/// shift `separation[j]` (class 1 minus class 0) and unit variance.
pub fn synth_classification(n: usize, separation: &[f64], seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::Argument(format!("synthetic datasets need n >= 10, got {n}")));
    }
    let d = separation.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = Array1::from_shape_fn(n, |i| (i % 2) as f64);
    let features = Array2::from_shape_fn((n, d), |(i, j)| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z + if i % 2 == 1 { separation[j] / 2.0 } else { -separation[j] / 2.0 }
    });
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    let mut ds = Dataset::new(features, target, names, Task::BinaryClassification)?;
    ds.ground_truth = Some(separation.to_vec());
    Ok(ds)
}
