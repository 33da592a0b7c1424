//! Simultaneous diagonalization of two matrix slices sharing column structure.
//!
//! Given `M_μ ≈ A diag(μ) Aᵀ` and `M_λ ≈ A diag(λ) Aᵀ` with `r` linearly independent
//! columns, the eigenvectors of the whitened pencil `(WᵀM_μW)(WᵀM_λW)⁻¹` lifted back
//! through `W` are the columns of `A` up to scale.

use thiserror::Error;

use crate::linalg::{eig_nonsymmetric, svd, LinalgError, Matrix};
use crate::scalar::{canonical_sign, norm2, Real};
use crate::tensor::ComponentMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JennrichConfig<T> {
    /// Number of directions `r` to recover.
    pub rank: usize,
    /// Largest tolerated `|Im λ|` relative to the spectral radius.
    pub imag_tol: T,
    /// Largest tolerated condition number of `WᵀM_λW`.
    pub cond_cap: T,
}

impl<T: Real> JennrichConfig<T> {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            imag_tol: T::lit(1e-6),
            cond_cap: T::lit(1e12),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JennrichError {
    #[error("slices must be square and of equal size, got {mu:?} and {lambda:?}")]
    Shape { mu: (usize, usize), lambda: (usize, usize) },
    #[error("rank {rank} outside 1..={dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("whitened pencil is singular (condition number {condition:e})")]
    SingularPencil { condition: f64 },
    #[error("eigenvalue with imaginary part {max_imag:e} relative to spectral radius")]
    ComplexSpectrum { max_imag: f64 },
    #[error("eigenvalues coincide to relative gap {gap:e}; directions are not identifiable")]
    RepeatedSpectrum { gap: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Recovers `cfg.rank` unit directions shared by two symmetric slices.
///
/// Output columns have unit norm with their first non-negligible entry positive and are
/// ordered by decreasing real eigenvalue of the pencil.
pub fn diagonalize<T: Real>(
    m_mu: &Matrix<T>,
    m_lambda: &Matrix<T>,
    cfg: &JennrichConfig<T>,
) -> Result<ComponentMatrix<T>, JennrichError> {
    let d = m_mu.rows();
    if !m_mu.is_square() || !m_lambda.is_square() || m_lambda.rows() != d {
        return Err(JennrichError::Shape {
            mu: (m_mu.rows(), m_mu.cols()),
            lambda: (m_lambda.rows(), m_lambda.cols()),
        });
    }
    let r = cfg.rank;
    if r == 0 || r > d {
        return Err(JennrichError::InvalidRank { rank: r, dim: d });
    }

    let w = svd(m_mu)?.left_vectors.leading_columns(r);
    let wt = w.transpose();
    let mu_r = wt.matmul(m_mu).matmul(&w);
    let lambda_r = wt.matmul(m_lambda).matmul(&w);

    let pencil = svd(&lambda_r)?;
    let condition = pencil.condition_number();
    if !(condition <= cfg.cond_cap) {
        return Err(JennrichError::SingularPencil {
            condition: condition.as_f64(),
        });
    }
    // (WᵀM_λW)⁻¹ = V Σ⁻¹ Uᵀ
    let inv = Matrix::from_fn(r, r, |i, j| {
        (0..r)
            .map(|k| pencil.right_vectors[(i, k)] * pencil.left_vectors[(j, k)] / pencil.singular_values[k])
            .sum()
    });
    let m = mu_r.matmul(&inv);

    let eig = eig_nonsymmetric(&m)?;
    let radius = eig.spectral_radius().max(T::min_positive_value());
    let max_imag = eig.max_imag() / radius;
    if max_imag > cfg.imag_tol {
        return Err(JennrichError::ComplexSpectrum {
            max_imag: max_imag.as_f64(),
        });
    }

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .re
            .partial_cmp(&eig.eigenvalues[i].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let min_gap = order
        .windows(2)
        .map(|p| eig.eigenvalues[p[0]].re - eig.eigenvalues[p[1]].re)
        .fold(T::infinity(), T::min);
    if r > 1 && min_gap <= cfg.imag_tol * radius {
        return Err(JennrichError::RepeatedSpectrum {
            gap: (min_gap / radius).as_f64(),
        });
    }

    let tol = T::epsilon().sqrt();
    let columns = order
        .iter()
        .map(|&idx| {
            let p: Vec<T> = eig.eigenvectors[idx].iter().map(|z| z.re).collect();
            let mut a = w.matvec(&p);
            let n = norm2(&a);
            a.iter_mut().for_each(|x| *x /= n);
            canonical_sign(&mut a, tol);
            a
        })
        .collect();
    Ok(ComponentMatrix::new(d, columns).expect("lifted eigenvectors have dimension d"))
}
