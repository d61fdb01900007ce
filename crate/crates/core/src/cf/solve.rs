use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};

/// Entries smaller than this in magnitude are treated as zero by [`rref`].
pub const RREF_SNAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Rref {
    pub matrix: Array2<f64>,
    /// Pivot column of each nonzero row, in row order.
    pub pivots: Vec<usize>,
}

/// Gauss-Jordan elimination with partial pivoting (largest magnitude in the
/// column). Entries below [`RREF_SNAP`] are snapped to zero.
pub fn rref(matrix: ArrayView2<f64>) -> Rref {
    let mut a = matrix.to_owned();
    let (m, n) = a.dim();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let (p, best) = (r..m)
            .map(|i| (i, a[[i, c]].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < RREF_SNAP {
            for i in r..m {
                a[[i, c]] = 0.0;
            }
            continue;
        }
        if p != r {
            for k in 0..n {
                a.swap([p, k], [r, k]);
            }
        }
        let pv = a[[r, c]];
        if pv != 1.0 {
            a.row_mut(r).mapv_inplace(|v| v / pv);
        }
        a[[r, c]] = 1.0;
        let pivot_row = a.row(r).to_owned();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = a[[i, c]];
            if f != 0.0 {
                a.row_mut(i).scaled_add(-f, &pivot_row);
                a[[i, c]] = 0.0;
            }
        }
        a.mapv_inplace(|v| if v.abs() < RREF_SNAP { 0.0 } else { v });
        pivots.push(c);
        r += 1;
    }
    Rref { matrix: a, pivots }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Consistent, full column rank: read off the reduced echelon form.
    Rref,
    /// Minimum-norm least squares from a singular value decomposition.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: Array1<f64>,
    pub residual_norm: f64,
    pub rank: usize,
    pub method: SolveMethod,
}

impl LinearSolution {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.x.len()
    }
}

/// Solves `a x = b`. Exact elimination is used when the system is
/// consistent with full column rank, least squares otherwise.
pub fn solve_linear(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<LinearSolution> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(shape("right-hand side", m, b.len()));
    }
    if m == 0 || n == 0 {
        return Err(crate::Error::Argument("empty linear system".into()));
    }
    let mut aug = Array2::zeros((m, n + 1));
    aug.slice_mut(s![.., ..n]).assign(&a);
    aug.column_mut(n).assign(&b);
    let red = rref(aug.view());
    let consistent = !red.pivots.contains(&n);
    let (x, rank, method) = if consistent && red.pivots.len() == n {
        // pivots are exactly 0..n, one per leading row
        (red.matrix.slice(s![..n, n]).to_owned(), n, SolveMethod::Rref)
    } else {
        let (x, rank) = least_squares(a, b);
        (x, rank, SolveMethod::LeastSquares)
    };
    let residual_norm = (&a.dot(&x) - &b).mapv(|v| v * v).sum().sqrt();
    Ok(LinearSolution {
        x,
        residual_norm,
        rank,
        method,
    })
}

fn least_squares(a: ArrayView2<f64>, b: ArrayView1<f64>) -> (Array1<f64>, usize) {
    let (m, n) = a.dim();
    let am = DMatrix::from_fn(m, n, |i, j| a[[i, j]]);
    let bv = DVector::from_iterator(m, b.iter().copied());
    let svd = am.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = m.max(n) as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd.solve(&bv, tol).expect("both factors were computed");
    (Array1::from_iter(x.iter().copied()), rank)
}
