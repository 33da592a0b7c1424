//! Recovery evaluation: optimal component matching and robust Kruskal rank.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{svd, LinalgError, Matrix};
use crate::scalar::Real;
use crate::tensor::ComponentMatrix;

/// Largest column count accepted by the exhaustive subset check.
pub const MAX_KRUSKAL_COLUMNS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("shape mismatch: truth is {truth_dim}x{truth_count}, estimate is {est_dim}x{est_count}")]
    ShapeMismatch {
        truth_dim: usize,
        truth_count: usize,
        est_dim: usize,
        est_count: usize,
    },
    #[error("exhaustive check supports at most {MAX_KRUSKAL_COLUMNS} columns, got {0}")]
    TooManyColumns(usize),
    #[error("tau must be positive and finite")]
    InvalidTau,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Result of matching estimated components to ground truth.
///
/// `permutation[i]` is the truth column assigned to estimate column `i`, and
/// `per_component_error[i] = ‖truth[permutation[i]] − estimate[i]‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub permutation: Vec<usize>,
    pub per_component_error: Vec<f64>,
    pub max_error: f64,
    pub mean_error: f64,
}

/// Largest `k` such that every `k`-subset `S` of columns has `σ_k(A_S) ≥ 1/τ`.
pub fn robust_kruskal_rank<T: Real>(a: &ComponentMatrix<T>, tau: T) -> Result<usize, EvalError> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(EvalError::InvalidTau);
    }
    let n = a.count();
    if n > MAX_KRUSKAL_COLUMNS {
        return Err(EvalError::TooManyColumns(n));
    }
    let threshold = tau.recip();
    let kmax = n.min(a.dim());
    let mut rank = 0;
    for k in 1..=kmax {
        if !all_subsets_pass(a, k, threshold)? {
            break;
        }
        rank = k;
    }
    Ok(rank)
}

fn all_subsets_pass<T: Real>(a: &ComponentMatrix<T>, k: usize, threshold: T) -> Result<bool, EvalError> {
    let n = a.count();
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = a.select(&idx).to_matrix();
        let s = svd(&sub)?;
        if s.singular_values[k - 1] < threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Matches estimate columns to truth columns minimizing the total `ℓ₂` distance.
pub fn match_components<T: Real>(
    truth: &ComponentMatrix<T>,
    estimate: &ComponentMatrix<T>,
) -> Result<MatchReport, EvalError> {
    if truth.dim() != estimate.dim() || truth.count() != estimate.count() {
        return Err(EvalError::ShapeMismatch {
            truth_dim: truth.dim(),
            truth_count: truth.count(),
            est_dim: estimate.dim(),
            est_count: estimate.count(),
        });
    }
    let n = truth.count();
    let cost = Matrix::from_fn(n, n, |i, j| {
        estimate
            .column(i)
            .iter()
            .zip(truth.column(j))
            .map(|(&e, &t)| {
                let d = (e - t).as_f64();
                d * d
            })
            .sum::<f64>()
            .sqrt()
    });
    let permutation = hungarian(&cost);
    let per_component_error: Vec<f64> = permutation.iter().enumerate().map(|(i, &j)| cost[(i, j)]).collect();
    let max_error = per_component_error.iter().copied().fold(0.0, f64::max);
    let mean_error = if n == 0 {
        0.0
    } else {
        per_component_error.iter().sum::<f64>() / n as f64
    };
    Ok(MatchReport {
        permutation,
        per_component_error,
        max_error,
        mean_error,
    })
}

/// Minimum-cost perfect assignment on a square cost matrix (shortest augmenting
/// paths with potentials). Returns `assignment[row] = column`.
pub fn hungarian(cost: &Matrix<f64>) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "cost matrix must be square");
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
