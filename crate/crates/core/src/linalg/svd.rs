//! Singular value and symmetric eigenvalue decompositions by Jacobi rotations.

use super::{LinalgError, Matrix};
use crate::scalar::{canonical_sign, dot, norm2, Real};

const MAX_SWEEPS: usize = 80;

/// Full singular value decomposition `M = U · diag(σ) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    /// `m × m` orthogonal matrix; column `j` pairs with `singular_values[j]` for `j < min(m, n)`.
    pub left_vectors: Matrix<T>,
    /// Nonincreasing, nonnegative, length `min(m, n)`.
    pub singular_values: Vec<T>,
    /// `n × n` orthogonal matrix.
    pub right_vectors: Matrix<T>,
}

impl<T: Real> SvdResult<T> {
    /// Ratio `σ₁ / σ_min`; infinite when the smallest singular value is zero.
    pub fn condition_number(&self) -> T {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
            (Some(_), Some(_)) => T::infinity(),
            _ => T::one(),
        }
    }

    /// Number of singular values strictly above `rel_tol · σ₁`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let top = self.singular_values.first().copied().unwrap_or_else(T::zero);
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * top && s > T::zero())
            .count()
    }

    /// `V · diag(σ⁺) · Uᵀ`, treating singular values at or below `rank_tol · σ₁` as zero.
    pub fn pseudoinverse(&self, rank_tol: T) -> Matrix<T> {
        let rows = self.left_vectors.rows();
        let cols = self.right_vectors.rows();
        let top = self.singular_values.first().copied().unwrap_or_else(T::zero);
        let cutoff = rank_tol * top;
        let mut out = Matrix::zeros(cols, rows);
        for (k, &sigma) in self.singular_values.iter().enumerate() {
            if sigma <= cutoff || sigma == T::zero() {
                continue;
            }
            let inv = T::one() / sigma;
            for i in 0..cols {
                let vi = self.right_vectors[(i, k)] * inv;
                for j in 0..rows {
                    out[(i, j)] += vi * self.left_vectors[(j, k)];
                }
            }
        }
        out
    }

    /// Rebuilds `U · diag(σ) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let m = self.left_vectors.rows();
        let n = self.right_vectors.rows();
        Matrix::from_fn(m, n, |i, j| {
            self.singular_values
                .iter()
                .enumerate()
                .map(|(k, &s)| self.left_vectors[(i, k)] * s * self.right_vectors[(j, k)])
                .sum()
        })
    }
}

/// Computes the full SVD of an arbitrary real matrix with one-sided Jacobi rotations.
///
/// Singular vectors are sign-normalized: each right singular vector has its first
/// non-negligible entry positive, and the matching left vector follows it.
pub fn svd<T: Real>(m: &Matrix<T>) -> Result<SvdResult<T>, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if m.rows() < m.cols() {
        // Aᵀ = U' Σ V'ᵀ  ⇒  A = V' Σ U'ᵀ
        let t = svd_tall(&m.transpose())?;
        let mut out = SvdResult {
            left_vectors: t.right_vectors,
            singular_values: t.singular_values,
            right_vectors: t.left_vectors,
        };
        normalize_signs(&mut out);
        return Ok(out);
    }
    let mut out = svd_tall(m)?;
    normalize_signs(&mut out);
    Ok(out)
}

fn svd_tall<T: Real>(a: &Matrix<T>) -> Result<SvdResult<T>, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    let eps = T::epsilon();
    let mut u = a.columns();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();

    // columns below this squared norm are numerically zero and left alone
    let floor = {
        let f = eps * a.frobenius_norm();
        f * f
    };
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == T::zero() || alpha <= floor || beta <= floor || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + T::one().hypot(zeta));
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut u, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NonConvergence {
            routine: "jacobi svd",
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<T> = u.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let top = norms
        .get(order.first().copied().unwrap_or(0))
        .copied()
        .unwrap_or_else(T::zero);
    let negligible = top * eps;

    let mut left: Vec<Option<Vec<T>>> = Vec::with_capacity(m);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m);
    for &j in &order {
        let s = norms[j];
        if s <= negligible || s == T::zero() {
            left.push(None);
            continue;
        }
        let mut col: Vec<T> = u[j].iter().map(|&x| x / s).collect();
        if orthonormalize_against(&mut col, &basis) {
            basis.push(col.clone());
            left.push(Some(col));
        } else {
            left.push(None);
        }
    }
    while left.len() < m {
        left.push(None);
    }
    let mut left_cols = Vec::with_capacity(m);
    for slot in left {
        match slot {
            Some(c) => left_cols.push(c),
            None => {
                let c = complete_basis(&basis, m);
                basis.push(c.clone());
                left_cols.push(c);
            }
        }
    }

    Ok(SvdResult {
        left_vectors: Matrix::from_columns(&left_cols),
        singular_values: order.iter().map(|&j| norms[j]).collect(),
        right_vectors: Matrix::from_columns(&order.iter().map(|&j| v[j].clone()).collect::<Vec<_>>()),
    })
}

fn rotate_pair<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Two passes of modified Gram-Schmidt; returns `false` if `v` collapses.
fn orthonormalize_against<T: Real>(v: &mut [T], basis: &[Vec<T>]) -> bool {
    for _ in 0..2 {
        for b in basis {
            let proj = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, &bi)| *x -= proj * bi);
        }
    }
    let n = norm2(v);
    if n < T::lit(0.5) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Picks the standard basis vector with the largest residual after projecting out `basis`.
fn complete_basis<T: Real>(basis: &[Vec<T>], m: usize) -> Vec<T> {
    let mut best: Option<(T, Vec<T>)> = None;
    for i in 0..m {
        let mut e = vec![T::zero(); m];
        e[i] = T::one();
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(x, &bi)| *x -= proj * bi);
            }
        }
        let n = norm2(&e);
        if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
            best = Some((n, e));
        }
    }
    let (n, mut e) = best.expect("basis completion needs m > 0");
    e.iter_mut().for_each(|x| *x /= n);
    e
}

fn normalize_signs<T: Real>(out: &mut SvdResult<T>) {
    let tol = T::epsilon().sqrt();
    let n = out.right_vectors.cols();
    let m = out.left_vectors.cols();
    for j in 0..n {
        let mut col = out.right_vectors.column(j);
        let before = col.clone();
        canonical_sign(&mut col, tol);
        if col != before {
            out.right_vectors.set_column(j, &col);
            if j < m {
                let flipped: Vec<T> = out.left_vectors.column(j).iter().map(|&x| -x).collect();
                out.left_vectors.set_column(j, &flipped);
            }
        }
    }
    for j in n..m {
        let mut col = out.left_vectors.column(j);
        canonical_sign(&mut col, tol);
        out.left_vectors.set_column(j, &col);
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic two-sided Jacobi rotations.
#[derive(Debug, Clone)]
pub struct SymEigResult<T> {
    /// Nonincreasing.
    pub eigenvalues: Vec<T>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: Matrix<T>,
}

/// Eigendecomposition of a symmetric matrix (only the symmetric part of `m` is used).
pub fn sym_eig<T: Real>(m: &Matrix<T>) -> Result<SymEigResult<T>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum();
        let total = a.frobenius_norm();
        if off.sqrt() <= eps * total * T::lit(0.5) || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + T::one().hypot(theta));
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NonConvergence {
            routine: "jacobi symmetric eigensolver",
            iterations: MAX_SWEEPS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let tol = eps.sqrt();
    let cols: Vec<Vec<T>> = order
        .iter()
        .map(|&j| {
            let mut c = v.column(j);
            canonical_sign(&mut c, tol);
            c
        })
        .collect();
    Ok(SymEigResult {
        eigenvalues: order.iter().map(|&j| a[(j, j)]).collect(),
        eigenvectors: Matrix::from_columns(&cols),
    })
}

/// Default relative rank tolerance: `max(rows, cols) · machine epsilon`.
pub fn default_rank_tol<T: Real>(m: &Matrix<T>) -> T {
    T::from_count(m.rows().max(m.cols())) * T::epsilon()
}

/// Moore-Penrose pseudoinverse via SVD, dropping singular values at or below `rank_tol · σ₁`.
pub fn pseudoinverse<T: Real>(m: &Matrix<T>, rank_tol: T) -> Result<Matrix<T>, LinalgError> {
    if rank_tol <= T::zero() {
        return Err(LinalgError::InvalidTolerance);
    }
    Ok(svd(m)?.pseudoinverse(rank_tol))
}

/// Smallest singular value and a unit right singular vector for it.
///
/// For wide matrices the smallest singular value is zero and the vector spans the null space.
pub fn min_singular_pair<T: Real>(m: &Matrix<T>) -> Result<(T, Vec<T>), LinalgError> {
    let s = svd(m)?;
    let n = m.cols();
    let sigma = if n > m.rows() {
        T::zero()
    } else {
        s.singular_values.last().copied().unwrap_or_else(T::zero)
    };
    Ok((sigma, s.right_vectors.column(n - 1)))
}
