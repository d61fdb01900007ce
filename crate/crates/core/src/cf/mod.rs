//! Contribution factors: how much of the model's performance each feature
//! accounts for, recovered from the masks of the Rashomon exploration.
//!
//! For every retrain `i` and feature `j`, `mu_ij` is the share of feature
//! `j`'s total loss effect produced by scaling it with `w_ij` rather than
//! removing it. The unknown contributions `C` then satisfy
//! `sum_j C_j = 1` and `sum_j mu_ij C_j = 1` for each retrain.

mod solve;

pub use solve::{rref, solve_linear, LinearSolution, Rref, SolveMethod, RREF_SNAP};

use ndarray::{s, Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::mask::apply_mask;
use crate::nn::{LayeredModel, Samples};
use crate::rashomon::WeightMatrix;
use crate::vtf::{Direction, ImportanceProfile, Method};

/// `|delta_p_total|` below this marks a feature with no measurable effect.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Normalization needs `|sum raw|` at least this large.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub retrain_index: usize,
    pub feature_index: usize,
    pub delta_p_partial: f64,
    pub delta_p_total: f64,
    pub mu: f64,
    pub degenerate: bool,
}

/// Losses shared by every estimate on one evaluation split: the unmasked
/// loss and, per feature, the loss with that column zeroed. All of them go
/// through the same masked forward path so the boundary cases are exact.
struct MuContext<'m, 's> {
    base: &'m LayeredModel,
    eval: Samples<'s>,
    p_full: f64,
    p_removed: Vec<f64>,
}

impl<'m, 's> MuContext<'m, 's> {
    fn new(base: &'m LayeredModel, eval: Samples<'s>, features: &[usize]) -> Result<Self> {
        let d = eval.x.ncols();
        if base.input_dim != d {
            return Err(shape("evaluation columns", base.input_dim, d));
        }
        let mut ctx = MuContext {
            base,
            eval,
            p_full: 0.0,
            p_removed: vec![f64::NAN; d],
        };
        ctx.p_full = ctx.performance(&Array1::ones(d))?;
        let removed: Vec<(usize, f64)> = features
            .par_iter()
            .map(|&j| ctx.performance_with(j, 0.0).map(|p| (j, p)))
            .collect::<Result<_>>()?;
        for (j, p) in removed {
            ctx.p_removed[j] = p;
        }
        Ok(ctx)
    }

    fn performance(&self, mask: &Array1<f64>) -> Result<f64> {
        let masked = apply_mask(mask.view(), self.eval.x)?;
        self.base.evaluate(masked.view(), self.eval.y)
    }

    fn performance_with(&self, j: usize, w: f64) -> Result<f64> {
        let mut mask = Array1::ones(self.eval.x.ncols());
        mask[j] = w;
        self.performance(&mask)
    }

    fn estimate(&self, retrain_index: usize, j: usize, w: f64) -> Result<MuEstimate> {
        let delta_p_partial = self.p_full - self.performance_with(j, w)?;
        let delta_p_total = self.p_full - self.p_removed[j];
        let degenerate = delta_p_total.abs() < DEGENERATE_TOL;
        Ok(MuEstimate {
            retrain_index,
            feature_index: j,
            delta_p_partial,
            delta_p_total,
            mu: if degenerate { 0.0 } else { delta_p_partial / delta_p_total },
            degenerate,
        })
    }
}

/// `mu` for scaling feature `j` by `w` with every other feature left at 1.
/// Performance is the base model's loss on `eval`.
pub fn mu_estimate(base: &LayeredModel, eval: Samples<'_>, j: usize, w: f64) -> Result<MuEstimate> {
    if j >= eval.x.ncols() {
        return Err(Error::Argument(format!("feature index {j} out of range for {} features", eval.x.ncols())));
    }
    MuContext::new(base, eval, &[j])?.estimate(0, j, w)
}

/// Coefficient matrix `(N + 1) x d` with the all-ones additivity row first,
/// and a right-hand side of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub feature_names: Vec<String>,
    pub coefficients: Array2<f64>,
    pub rhs: Array1<f64>,
    /// Empty for systems built directly from coefficients.
    pub estimates: Vec<MuEstimate>,
    pub degenerate_features: Vec<usize>,
}

impl AugmentedSystem {
    /// Wraps a ready-made coefficient matrix. Row 0 must be all ones.
    pub fn from_coefficients(coefficients: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        let (m, d) = coefficients.dim();
        if m == 0 || d == 0 {
            return Err(Error::Argument("empty contribution system".into()));
        }
        if feature_names.len() != d {
            return Err(shape("feature names", d, feature_names.len()));
        }
        if coefficients.row(0).iter().any(|&c| c != 1.0) {
            return Err(Error::Argument("row 0 of a contribution system must be all ones".into()));
        }
        Ok(AugmentedSystem {
            feature_names,
            rhs: Array1::ones(m),
            coefficients,
            estimates: Vec::new(),
            degenerate_features: Vec::new(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Number of retrain equations, excluding the additivity row.
    pub fn n_equations(&self) -> usize {
        self.coefficients.nrows() - 1
    }

    /// The additivity row plus the first `k` retrain equations.
    pub fn prefix(&self, k: usize) -> AugmentedSystem {
        let rows = (k + 1).min(self.coefficients.nrows());
        AugmentedSystem {
            feature_names: self.feature_names.clone(),
            coefficients: self.coefficients.slice(s![..rows, ..]).to_owned(),
            rhs: self.rhs.slice(s![..rows]).to_owned(),
            estimates: self.estimates.iter().filter(|e| e.retrain_index < k).copied().collect(),
            degenerate_features: self.degenerate_features.clone(),
        }
    }

    /// Coefficients and right-hand side, one equation per line.
    pub fn to_csv(&self) -> String {
        let mut out: Vec<String> = self.feature_names.iter().map(|n| format!("mu_{n}")).collect();
        out.push("rhs".into());
        let mut text = out.join(",") + "\n";
        for (row, b) in self.coefficients.axis_iter(Axis(0)).zip(&self.rhs) {
            let cells: Vec<String> = row.iter().chain(std::iter::once(b)).map(|v| format!("{v:?}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        text
    }
}

/// Builds the system from every accepted mask in `weights`, measuring each
/// `mu` on `eval`.
pub fn assemble_system(weights: &WeightMatrix, base: &LayeredModel, eval: Samples<'_>) -> Result<AugmentedSystem> {
    let d = weights.n_features();
    if eval.x.ncols() != d {
        return Err(shape("evaluation columns", d, eval.x.ncols()));
    }
    let n = weights.n_rows();
    if n < d {
        return Err(Error::InsufficientRetrains { available: n, required: d });
    }
    let features: Vec<usize> = (0..d).collect();
    let ctx = MuContext::new(base, eval, &features)?;
    let rows = weights.rows();
    let estimates: Vec<MuEstimate> = (0..n * d)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / d, k % d);
            ctx.estimate(i, j, rows[[i, j]])
        })
        .collect::<Result<_>>()?;
    let mut coefficients = Array2::ones((n + 1, d));
    for e in &estimates {
        coefficients[[e.retrain_index + 1, e.feature_index]] = e.mu;
    }
    let degenerate_features = (0..d)
        .filter(|&j| (ctx.p_full - ctx.p_removed[j]).abs() < DEGENERATE_TOL)
        .collect();
    Ok(AugmentedSystem {
        feature_names: weights.feature_names.clone(),
        coefficients,
        rhs: Array1::ones(n + 1),
        estimates,
        degenerate_features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionVector {
    pub raw: Vec<f64>,
    /// `raw / sum(raw)`.
    pub normalized: Vec<f64>,
    pub residual_norm: f64,
    pub rank_deficient: bool,
    pub rank: usize,
    pub method: SolveMethod,
}

impl ContributionVector {
    pub fn negative_features(&self) -> Vec<usize> {
        (0..self.normalized.len()).filter(|&j| self.normalized[j] < 0.0).collect()
    }
}

pub fn solve_contributions(system: &AugmentedSystem) -> Result<ContributionVector> {
    let sol = solve_linear(system.coefficients.view(), system.rhs.view())?;
    let raw = sol.x.to_vec();
    let sum: f64 = raw.iter().sum();
    if !(sum.abs() >= NORMALIZATION_TOL) {
        return Err(Error::Normalization { sum, raw });
    }
    Ok(ContributionVector {
        normalized: raw.iter().map(|c| c / sum).collect(),
        raw,
        residual_norm: sol.residual_norm,
        rank_deficient: sol.rank_deficient(),
        rank: sol.rank,
        method: sol.method,
    })
}

/// Normalized solution after each prefix of equations, starting once the
/// prefix holds `d` retrain rows. `None` marks prefixes that could not be
/// normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixSolution {
    pub equations: usize,
    pub normalized: Option<Vec<f64>>,
}

pub fn prefix_solutions(system: &AugmentedSystem) -> Vec<PrefixSolution> {
    let d = system.n_features();
    (d.max(1)..=system.n_equations())
        .into_par_iter()
        .map(|k| PrefixSolution {
            equations: k,
            normalized: solve_contributions(&system.prefix(k)).ok().map(|c| c.normalized),
        })
        .collect()
}

/// Everything the contribution pipeline produced, for audit output.
#[derive(Debug, Clone)]
pub struct CfAnalysis {
    pub system: AugmentedSystem,
    pub contributions: ContributionVector,
    pub profile: ImportanceProfile,
}

#[derive(Serialize)]
struct SolutionDocument<'a> {
    feature_names: &'a [String],
    #[serde(flatten)]
    contributions: &'a ContributionVector,
    degenerate_features: &'a [usize],
    negative_features: Vec<usize>,
}

impl CfAnalysis {
    pub fn solution_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SolutionDocument {
            feature_names: &self.system.feature_names,
            contributions: &self.contributions,
            degenerate_features: &self.system.degenerate_features,
            negative_features: self.contributions.negative_features(),
        })?)
    }
}

/// mu estimates, system assembly, solve and normalization in one call.
pub fn cf_analysis(weights: &WeightMatrix, base: &LayeredModel, eval: Samples<'_>) -> Result<CfAnalysis> {
    let system = assemble_system(weights, base, eval)?;
    let contributions = solve_contributions(&system)?;
    let mut profile = ImportanceProfile::new(
        Method::Cf,
        contributions.normalized.clone(),
        Direction::HigherIsMoreImportant,
        system.feature_names.clone(),
    )?;
    profile.notes.push(format!(
        "residual_norm={:e} rank={} method={:?}",
        contributions.residual_norm, contributions.rank, contributions.method
    ));
    if contributions.rank_deficient {
        profile.notes.push("system is rank deficient; minimum-norm solution".into());
    }
    for &j in &system.degenerate_features {
        profile.notes.push(format!("feature {} has no measurable loss effect", system.feature_names[j]));
    }
    for j in contributions.negative_features() {
        profile.notes.push(format!("feature {} has a negative contribution", system.feature_names[j]));
    }
    Ok(CfAnalysis {
        system,
        contributions,
        profile,
    })
}

pub fn cf_profile(weights: &WeightMatrix, base: &LayeredModel, eval: Samples<'_>) -> Result<ImportanceProfile> {
    cf_analysis(weights, base, eval).map(|a| a.profile)
}
