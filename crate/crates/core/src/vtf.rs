//! Variance tolerance factors, the unimportant-feature selection rule and
//! recursive variance tolerance weights, plus [`ImportanceProfile`], the
//! common output of every importance method in the crate.

use std::cmp::Ordering;
use std::fmt;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rashomon::WeightMatrix;

/// Default `t > threshold` cut for [`select_unimportant`].
pub const DEFAULT_THRESHOLD: f64 = 1.0;

/// Floor applied to the RVTW denominators so constant columns stay finite.
pub const RVTW_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Method {
    Vtf,
    Rvtw,
    Cf,
    Permutation,
    ConnectionWeights,
    FisherScore,
    /// A ranking produced by some other tool.
    External(String),
}

impl Method {
    pub fn name(&self) -> &str {
        match self {
            Method::Vtf => "vtf",
            Method::Rvtw => "rvtw",
            Method::Cf => "cf",
            Method::Permutation => "permutation",
            Method::ConnectionWeights => "connection_weights",
            Method::FisherScore => "fisher_score",
            Method::External(name) => name,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

impl From<String> for Method {
    fn from(s: String) -> Method {
        match s.as_str() {
            "vtf" => Method::Vtf,
            "rvtw" => Method::Rvtw,
            "cf" => Method::Cf,
            "permutation" => Method::Permutation,
            "connection_weights" => Method::ConnectionWeights,
            "fisher_score" => Method::FisherScore,
            _ => Method::External(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsMoreImportant,
    HigherIsLessImportant,
    /// Larger magnitude is more important; the sign carries direction of
    /// effect only.
    AbsHigherIsMoreImportant,
}

impl Direction {
    /// Maps a score to a key where larger always means more important.
    /// NaN sorts last.
    fn importance_key(self, score: f64) -> f64 {
        if score.is_nan() {
            return f64::NEG_INFINITY;
        }
        match self {
            Direction::HigherIsMoreImportant => score,
            Direction::HigherIsLessImportant => -score,
            Direction::AbsHigherIsMoreImportant => score.abs(),
        }
    }
}

/// Per-feature scores from one method and the ranking they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceProfile {
    pub method: Method,
    pub direction: Direction,
    pub feature_names: Vec<String>,
    #[serde(with = "crate::util::float_vec")]
    pub scores: Vec<f64>,
    /// Feature indices, most important first.
    pub ranking: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    pub score: f64,
    /// 1 = most important.
    pub rank: usize,
}

impl ImportanceProfile {
    pub fn new(method: Method, scores: Vec<f64>, direction: Direction, feature_names: Vec<String>) -> Result<Self> {
        if scores.len() != feature_names.len() {
            return Err(crate::error::shape("profile scores", feature_names.len(), scores.len()));
        }
        let ranking = ranking_of(&scores, direction);
        Ok(ImportanceProfile {
            method,
            direction,
            feature_names,
            scores,
            ranking,
            notes: Vec::new(),
        })
    }

    /// Profile from an explicit order (most important first). Scores are
    /// `d - position`, so higher is more important.
    pub fn from_ranking(method: Method, order: &[usize], feature_names: Vec<String>) -> Result<Self> {
        let d = feature_names.len();
        let mut seen = vec![false; d];
        for &j in order {
            if j >= d || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Argument(format!("ranking is not a permutation of 0..{d}")));
            }
        }
        if order.len() != d {
            return Err(Error::Argument(format!("ranking is not a permutation of 0..{d}")));
        }
        let mut scores = vec![0.0; d];
        for (pos, &j) in order.iter().enumerate() {
            scores[j] = (d - pos) as f64;
        }
        ImportanceProfile::new(method, scores, Direction::HigherIsMoreImportant, feature_names)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `name,score,rank` rows in feature order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,score,rank\n");
        let mut rank_of = vec![0; self.len()];
        for (pos, &j) in self.ranking.iter().enumerate() {
            rank_of[j] = pos + 1;
        }
        for (j, name) in self.feature_names.iter().enumerate() {
            out.push_str(&format!("{},{:?},{}\n", csv_field(name), self.scores[j], rank_of[j]));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn ranking_of(scores: &[f64], direction: Direction) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps ascending index order among ties
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (direction.importance_key(scores[a]), direction.importance_key(scores[b]));
        kb.partial_cmp(&ka).unwrap_or(Ordering::Equal)
    });
    idx
}

/// Features in ranking order with their 1-based rank.
pub fn rank(profile: &ImportanceProfile) -> Vec<RankedFeature> {
    profile
        .ranking
        .iter()
        .enumerate()
        .map(|(pos, &j)| RankedFeature {
            index: j,
            name: profile.feature_names[j].clone(),
            score: profile.scores[j],
            rank: pos + 1,
        })
        .collect()
}

/// `t_j = mean_i |w_ij - 1|`. Small `t` means the models tolerate little
/// rescaling of feature `j`, i.e. the feature matters.
pub fn vtf_scores(weights: &WeightMatrix) -> Result<ImportanceProfile> {
    let rows = weights.rows();
    if rows.nrows() == 0 {
        return Err(Error::Argument("VTF of an empty weight matrix".into()));
    }
    let t = rows.mapv(|w| (w - 1.0).abs()).mean_axis(Axis(0)).unwrap();
    ImportanceProfile::new(Method::Vtf, t.to_vec(), Direction::HigherIsLessImportant, weights.feature_names.clone())
}

/// Indices `j` with `t_j > threshold`, in one pass.
pub fn select_unimportant(vtf: &ImportanceProfile, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0) {
        return Err(Error::Argument(format!("selection threshold must be positive, got {threshold}")));
    }
    Ok(vtf
        .scores
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t > threshold)
        .map(|(j, _)| j)
        .collect())
}

/// `v_j = mean(w_j) / (mean(|w_j - 1|) * std(w_j))` with the population
/// standard deviation. Both denominator factors are floored at
/// [`RVTW_FLOOR`].
pub fn rvtw_scores(weights: &WeightMatrix) -> Result<ImportanceProfile> {
    let rows = weights.rows();
    if rows.nrows() < 2 {
        return Err(Error::Argument(format!(
            "RVTW needs at least 2 retrains for a standard deviation, got {}",
            rows.nrows()
        )));
    }
    let mut notes = Vec::new();
    let scores = rows
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(j, col)| {
            let mean = col.mean().unwrap();
            let mean_t = col.mapv(|w| (w - 1.0).abs()).mean().unwrap();
            let std = col.std(0.0);
            if std < RVTW_FLOOR {
                notes.push(format!("feature {j}: zero spread, std floored to {RVTW_FLOOR:e}"));
            }
            mean / (mean_t.max(RVTW_FLOOR) * std.max(RVTW_FLOOR))
        })
        .collect();
    let mut profile = ImportanceProfile::new(Method::Rvtw, scores, Direction::HigherIsMoreImportant, weights.feature_names.clone())?;
    profile.notes = notes;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn wm(rows: &[Vec<f64>]) -> WeightMatrix {
        WeightMatrix::from_rows(rows, names(rows[0].len())).unwrap()
    }

    #[test]
    fn vtf_examples() {
        let all_ones = vtf_scores(&wm(&[vec![1.0; 3], vec![1.0; 3]])).unwrap();
        assert_eq!(all_ones.scores, vec![0.0; 3]);
        assert_eq!(vtf_scores(&wm(&[vec![0.0, 2.0, 1.0]])).unwrap().scores, vec![1.0, 1.0, 0.0]);
        let two = vtf_scores(&wm(&[vec![0.5, 1.0], vec![1.5, 1.0]])).unwrap();
        assert_eq!(two.scores[0], 0.5);
        assert_eq!(two.direction, Direction::HigherIsLessImportant);
    }

    #[test]
    fn vtf_ranking_puts_small_t_first() {
        let p = vtf_scores(&wm(&[vec![0.0, 2.0, 1.0]])).unwrap();
        assert_eq!(p.ranking, vec![2, 0, 1]);
    }

    #[test]
    fn empty_matrix_rejected() {
        let empty = WeightMatrix::from_rows(&[], names(2)).unwrap();
        assert!(vtf_scores(&empty).is_err());
        assert!(rvtw_scores(&empty).is_err());
    }

    #[test]
    fn selection_rule() {
        let p = ImportanceProfile::new(Method::Vtf, vec![0.5, 1.2, 0.01], Direction::HigherIsLessImportant, names(3)).unwrap();
        assert_eq!(select_unimportant(&p, 1.0).unwrap(), vec![1]);
        assert_eq!(select_unimportant(&p, 0.4).unwrap(), vec![0, 1]);
        let zeros = ImportanceProfile::new(Method::Vtf, vec![0.0; 3], Direction::HigherIsLessImportant, names(3)).unwrap();
        assert!(select_unimportant(&zeros, 1.0).unwrap().is_empty());
        assert!(select_unimportant(&p, 0.0).is_err());
        assert!(select_unimportant(&p, -1.0).is_err());
    }

    #[test]
    fn rvtw_hand_example() {
        let p = rvtw_scores(&wm(&[vec![1.0, 0.1], vec![1.2, -0.1]])).unwrap();
        assert!((p.scores[0] - 110.0).abs() < 1e-9, "{}", p.scores[0]);
        assert!(p.scores[1].abs() < 1e-12);
        assert_eq!(p.ranking, vec![0, 1]);
    }

    #[test]
    fn rvtw_constant_column_is_finite() {
        let p = rvtw_scores(&wm(&[vec![0.8, 0.3], vec![0.8, 0.5]])).unwrap();
        assert!(p.scores[0].is_finite());
        assert!(p.scores[0] > 1e10);
        assert_eq!(p.notes.len(), 1);
    }

    #[test]
    fn rvtw_needs_two_rows() {
        assert!(rvtw_scores(&wm(&[vec![1.0, 0.5]])).is_err());
    }

    #[test]
    fn rvtw_grows_when_a_column_contracts_toward_one() {
        // Oracle: brute force over random 10-row matrices. Shrinking the
        // spread around a fixed mean that sits above the spread keeps every
        // entry on one side of 1 so mean-t and std both drop.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mean: f64 = rng.random_range(1.5..3.0);
            let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![mean + rng.random_range(-0.4..0.4), rng.random()]).collect();
            let col_mean = rows.iter().map(|r| r[0]).sum::<f64>() / 10.0;
            let v0 = rvtw_scores(&wm(&rows)).unwrap().scores[0];
            // contract toward 1 with the mean held fixed: shrink deviations
            let shrunk: Vec<Vec<f64>> = rows.iter().map(|r| vec![col_mean + 0.5 * (r[0] - col_mean), r[1]]).collect();
            let v1 = rvtw_scores(&wm(&shrunk)).unwrap().scores[0];
            assert!(v1.abs() > v0.abs(), "{v0} -> {v1}");
        }
    }

    #[test]
    fn rank_orders_and_breaks_ties() {
        let p = ImportanceProfile::new(Method::Permutation, vec![3.0, 1.0, 2.0], Direction::HigherIsMoreImportant, names(3)).unwrap();
        assert_eq!(p.ranking, vec![0, 2, 1]);
        let ranked = rank(&p);
        assert_eq!(ranked[0].rank, 1);
        assert_eq!(ranked[2].name, "f1");
        let ties = ImportanceProfile::new(Method::Permutation, vec![1.0; 4], Direction::HigherIsMoreImportant, names(4)).unwrap();
        assert_eq!(ties.ranking, vec![0, 1, 2, 3]);
        let rev = ImportanceProfile::new(Method::Permutation, vec![3.0, 1.0, 2.0], Direction::HigherIsLessImportant, names(3)).unwrap();
        assert_eq!(rev.ranking, vec![1, 2, 0]);
    }

    #[test]
    fn abs_direction_and_nan() {
        let p = ImportanceProfile::new(Method::ConnectionWeights, vec![-3.0, 1.0, f64::NAN, 2.0], Direction::AbsHigherIsMoreImportant, names(4)).unwrap();
        assert_eq!(p.ranking, vec![0, 3, 1, 2]);
    }

    #[test]
    fn json_and_csv() {
        let mut p = ImportanceProfile::new(Method::FisherScore, vec![f64::INFINITY, 0.5], Direction::HigherIsMoreImportant, names(2)).unwrap();
        p.notes.push("x".into());
        let back = ImportanceProfile::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.to_csv(), "name,score,rank\nf0,inf,1\nf1,0.5,2\n");
        let ext = ImportanceProfile::from_json(&p.to_json().unwrap().replace("fisher_score", "shap")).unwrap();
        assert_eq!(ext.method, Method::External("shap".into()));
    }

    #[test]
    fn from_ranking_round_trips() {
        let p = ImportanceProfile::from_ranking(Method::External("rf".into()), &[2, 0, 1], names(3)).unwrap();
        assert_eq!(p.ranking, vec![2, 0, 1]);
        assert!(ImportanceProfile::from_ranking(Method::Cf, &[0, 0, 1], names(3)).is_err());
        assert!(ImportanceProfile::from_ranking(Method::Cf, &[0, 1], names(3)).is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6, 2usize..8).prop_flat_map(|(d, n)| proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, d), n))
    }

    proptest! {
        #[test]
        fn vtf_is_permutation_equivariant(rows in matrix_strategy(), seed in 0u64..1000) {
            use rand::{seq::SliceRandom, SeedableRng};
            let d = rows[0].len();
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
            let a = vtf_scores(&wm(&rows)).unwrap().scores;
            let b = vtf_scores(&wm(&permuted)).unwrap().scores;
            for (k, &j) in perm.iter().enumerate() {
                prop_assert_eq!(b[k], a[j]);
            }
        }

        #[test]
        fn selection_partitions_and_is_monotone(t in proptest::collection::vec(0.0f64..3.0, 1..12), th1 in 0.01f64..3.0, th2 in 0.01f64..3.0) {
            let p = ImportanceProfile::new(Method::Vtf, t.clone(), Direction::HigherIsLessImportant, names(t.len())).unwrap();
            let (lo, hi) = if th1 <= th2 { (th1, th2) } else { (th2, th1) };
            let a = select_unimportant(&p, lo).unwrap();
            let b = select_unimportant(&p, hi).unwrap();
            prop_assert!(b.iter().all(|j| a.contains(j)));
            let kept: Vec<usize> = (0..t.len()).filter(|j| !a.contains(j)).collect();
            prop_assert_eq!(kept.len() + a.len(), t.len());
        }

        #[test]
        fn duplicating_rows_leaves_rvtw_unchanged(rows in matrix_strategy()) {
            prop_assume!(rows.len() >= 2);
            let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
            let a = rvtw_scores(&wm(&rows)).unwrap();
            let b = rvtw_scores(&wm(&doubled)).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn ranking_survives_uniform_rescaling_of_spread(rows in matrix_strategy(), c in 0.01f64..100.0) {
            // dividing every v by the same positive constant (e.g. sqrt(N))
            // cannot change the order
            prop_assume!(rows.len() >= 2);
            let p = rvtw_scores(&wm(&rows)).unwrap();
            let scaled: Vec<f64> = p.scores.iter().map(|v| v / c).collect();
            let q = ImportanceProfile::new(Method::Rvtw, scaled, Direction::HigherIsMoreImportant, p.feature_names.clone()).unwrap();
            prop_assert_eq!(p.ranking, q.ranking);
        }
    }
}
