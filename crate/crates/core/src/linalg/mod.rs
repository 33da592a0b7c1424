//! Dense matrix kernels consumed by the decomposition algorithms: SVD,
//! nonsymmetric eigendecomposition, pseudoinverse and smallest singular pairs.

mod eig;
mod matrix;
mod svd;

use thiserror::Error;

pub use eig::{eig_nonsymmetric, eigenvalues, EigResult};
pub use matrix::Matrix;
pub use svd::{default_rank_tol, min_singular_pair, pseudoinverse, svd, sym_eig, SvdResult, SymEigResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("{routine} did not converge within {iterations} iterations")]
    NonConvergence { routine: &'static str, iterations: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("rank tolerance must be positive")]
    InvalidTolerance,
}
