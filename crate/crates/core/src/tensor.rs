//! Dense symmetric order-3 tensors and component matrices.

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{dot, norm2, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tensor dimension must be positive")]
    ZeroDimension,
    #[error("entry storage has length {found}, expected {expected}")]
    StorageLength { expected: usize, found: usize },
    #[error("non-finite entry")]
    NonFinite,
}

fn check_dim(expected: usize, found: usize) -> Result<(), TensorError> {
    if expected == found {
        Ok(())
    } else {
        Err(TensorError::DimensionMismatch { expected, found })
    }
}

/// Fully symmetric tensor in `ℝ^{d×d×d}` with dense row-major `(i, j, k)` storage.
///
/// Every entry is stored for each of its index permutations, and all copies are
/// bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Real> SymTensor3<T> {
    /// Builds a tensor from row-major entries, averaging each entry over its six
    /// index permutations.
    pub fn new(dim: usize, entries: Vec<T>) -> Result<Self, TensorError> {
        if dim == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let expected = dim * dim * dim;
        if entries.len() != expected {
            return Err(TensorError::StorageLength {
                expected,
                found: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        let at = |i: usize, j: usize, k: usize| entries[(i * dim + j) * dim + k];
        let sixth = T::one() / T::lit(6.0);
        Ok(Self::from_sorted_fn(dim, |i, j, k| {
            (at(i, j, k) + at(i, k, j) + at(j, i, k) + at(j, k, i) + at(k, i, j) + at(k, j, i)) * sixth
        }))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        Self {
            dim,
            entries: vec![T::zero(); dim * dim * dim],
        }
    }

    /// Fills the tensor from a function evaluated once per sorted index triple `i ≤ j ≤ k`.
    pub(crate) fn from_sorted_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut entries = vec![T::zero(); dim * dim * dim];
        let idx = |i: usize, j: usize, k: usize| (i * dim + j) * dim + k;
        for i in 0..dim {
            for j in i..dim {
                for k in j..dim {
                    let v = f(i, j, k);
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        entries[idx(a, b, c)] = v;
                    }
                }
            }
        }
        Self { dim, entries }
    }

    /// `Σ_i scales_i · a_i ⊗ a_i ⊗ a_i`; scales default to one.
    pub fn from_components(a: &ComponentMatrix<T>, scales: Option<&[T]>) -> Result<Self, TensorError> {
        if let Some(s) = scales {
            check_dim(a.count(), s.len())?;
        }
        let ones;
        let scales = match scales {
            Some(s) => s,
            None => {
                ones = vec![T::one(); a.count()];
                &ones
            }
        };
        Ok(Self::from_sorted_fn(a.dim(), |p, q, r| {
            a.columns
                .iter()
                .zip(scales)
                .map(|(col, &s)| s * col[p] * col[q] * col[r])
                .sum()
        }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.entries[(i * self.dim + j) * self.dim + k]
    }

    /// Row-major `(i, j, k)` entries.
    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// The matrix `T_x` with `(j, k)` entry `Σ_i T_{ijk} x_i`.
    pub fn contract(&self, x: &[T]) -> Result<Matrix<T>, TensorError> {
        check_dim(self.dim, x.len())?;
        let d = self.dim;
        let mut out = vec![T::zero(); d * d];
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let slab = &self.entries[i * d * d..(i + 1) * d * d];
            for (o, &t) in out.iter_mut().zip(slab) {
                *o += xi * t;
            }
        }
        // slab sums accumulate in the same order for (j,k) and (k,j)
        Ok(Matrix::from_row_major(d, d, out))
    }

    /// `T(x, u, v) = Σ_{ijk} T_{ijk} x_i u_j v_k`.
    pub fn trilinear(&self, x: &[T], u: &[T], v: &[T]) -> Result<T, TensorError> {
        check_dim(self.dim, u.len())?;
        check_dim(self.dim, v.len())?;
        let tx = self.contract(x)?;
        Ok(dot(u, &tx.matvec(v)))
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.entries)
    }

    pub fn frobenius_distance(&self, other: &Self) -> Result<T, TensorError> {
        check_dim(self.dim, other.dim)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt())
    }

    /// `self − Σ_i scales_i · a_i^{⊗3}`.
    pub fn deflate(&self, a: &ComponentMatrix<T>, scales: &[T]) -> Result<Self, TensorError> {
        check_dim(self.dim, a.dim())?;
        let removed = Self::from_components(a, Some(scales))?;
        self.sub(&removed)
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> SymTensor3<U> {
        SymTensor3 {
            dim: self.dim,
            entries: self.entries.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }
}

/// A `d × n` matrix stored as `n` column vectors `a_1, …, a_n` in `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMatrix<T> {
    dim: usize,
    columns: Vec<Vec<T>>,
}

impl<T: Real> ComponentMatrix<T> {
    /// An empty column set is allowed (e.g. deflating by nothing).
    pub fn new(dim: usize, columns: Vec<Vec<T>>) -> Result<Self, TensorError> {
        if dim == 0 {
            return Err(TensorError::ZeroDimension);
        }
        for c in &columns {
            check_dim(dim, c.len())?;
            if c.iter().any(|x| !x.is_finite()) {
                return Err(TensorError::NonFinite);
            }
        }
        Ok(Self { dim, columns })
    }

    pub fn from_matrix(m: &Matrix<T>) -> Result<Self, TensorError> {
        Self::new(m.rows(), m.columns())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[T] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Vec<T>> {
        self.columns
    }

    /// The `d × n` matrix with these columns.
    pub fn to_matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.dim, self.count(), |i, j| self.columns[j][i])
    }

    pub fn norms(&self) -> Vec<T> {
        self.columns.iter().map(|c| norm2(c)).collect()
    }

    /// Concatenates the columns of `self` and `other`.
    pub fn concat(&self, other: &Self) -> Result<Self, TensorError> {
        check_dim(self.dim, other.dim)?;
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        Ok(Self { dim: self.dim, columns })
    }

    /// Keeps the columns at the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            columns: indices.iter().map(|&i| self.columns[i].clone()).collect(),
        }
    }

    /// Multiplies column `i` by `factors[i]`.
    pub fn scale_columns(&self, factors: &[T]) -> Result<Self, TensorError> {
        check_dim(self.count(), factors.len())?;
        Ok(Self {
            dim: self.dim,
            columns: self
                .columns
                .iter()
                .zip(factors)
                .map(|(c, &f)| c.iter().map(|&x| x * f).collect())
                .collect(),
        })
    }

    pub fn cast<U: Real>(&self) -> ComponentMatrix<U> {
        ComponentMatrix {
            dim: self.dim,
            columns: self
                .columns
                .iter()
                .map(|c| c.iter().map(|&x| U::lit(x.as_f64())).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, d: usize) -> SymTensor3<f64> {
        SymTensor3::new(d, (0..d * d * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Direct triple-loop construction of `Σ s_i a_i ⊗ a_i ⊗ a_i`.
    fn triple_loop(cols: &[Vec<f64>], scales: &[f64]) -> Vec<f64> {
        let d = cols[0].len();
        let mut out = vec![0.0; d * d * d];
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    out[(p * d + q) * d + r] = cols.iter().zip(scales).map(|(a, s)| s * a[p] * a[q] * a[r]).sum();
                }
            }
        }
        out
    }

    #[test]
    fn single_basis_rank_one() {
        let a = ComponentMatrix::new(2, vec![e(2, 0)]).unwrap();
        let t = SymTensor3::from_components(&a, Some(&[1.0])).unwrap();
        assert_eq!(t.get(0, 0, 0), 1.0);
        assert_eq!(t.entries().iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn diagonal_tensor_with_signed_scales() {
        let a = ComponentMatrix::new(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let t = SymTensor3::from_components(&a, Some(&[1.0, -1.0])).unwrap();
        assert_eq!(t.get(0, 0, 0), 1.0);
        assert_eq!(t.get(1, 1, 1), -1.0);
        assert_eq!(t.entries().iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn from_components_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cols = vec![random_vec(&mut rng, 3), random_vec(&mut rng, 3)];
        let a = ComponentMatrix::new(3, cols.clone()).unwrap();
        let t = SymTensor3::from_components(&a, Some(&[2.0, 3.0])).unwrap();
        let oracle = triple_loop(&cols, &[2.0, 3.0]);
        for (x, y) in t.entries().iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn scale_length_mismatch() {
        let a = ComponentMatrix::new(2, vec![e(2, 0)]).unwrap();
        assert!(matches!(
            SymTensor3::from_components(&a, Some(&[1.0, 2.0])),
            Err(TensorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn contract_basis_cases() {
        let t = SymTensor3::from_components(&ComponentMatrix::new(2, vec![e(2, 0)]).unwrap(), None).unwrap();
        let m = t.contract(&[1.0, 0.0]).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let m = t.contract(&[0.0, 1.0]).unwrap();
        assert_eq!(m.as_slice(), &[0.0; 4]);
        assert!(matches!(t.contract(&[1.0]), Err(TensorError::DimensionMismatch { .. })));
    }

    #[test]
    fn contract_rank_one_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_vec(&mut rng, 4);
        let x = random_vec(&mut rng, 4);
        let t = SymTensor3::from_components(&ComponentMatrix::new(4, vec![a.clone()]).unwrap(), None).unwrap();
        let m = t.contract(&x).unwrap();
        let xa = dot(&x, &a);
        for j in 0..4 {
            for k in 0..4 {
                assert!((m[(j, k)] - xa * a[j] * a[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn trilinear_cases() {
        let t = SymTensor3::from_components(&ComponentMatrix::new(2, vec![e(2, 0)]).unwrap(), None).unwrap();
        assert_eq!(t.trilinear(&e(2, 0), &e(2, 0), &e(2, 0)).unwrap(), 1.0);
        assert_eq!(t.trilinear(&e(2, 0), &e(2, 1), &e(2, 0)).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(&mut rng, 5);
        let (x, u, v) = (
            random_vec(&mut rng, 5),
            random_vec(&mut rng, 5),
            random_vec(&mut rng, 5),
        );
        let via_contract = dot(&u, &t.contract(&x).unwrap().matvec(&v));
        let mut brute = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    brute += t.get(i, j, k) * x[i] * u[j] * v[k];
                }
            }
        }
        let got = t.trilinear(&x, &u, &v).unwrap();
        assert!((got - via_contract).abs() <= 1e-12);
        assert!((got - brute).abs() <= 1e-12);
    }

    #[test]
    fn frobenius_cases() {
        let t = SymTensor3::from_components(&ComponentMatrix::new(2, vec![e(2, 0)]).unwrap(), None).unwrap();
        assert_eq!(t.frobenius_distance(&t).unwrap(), 0.0);
        assert_eq!(t.frobenius_distance(&SymTensor3::zeros(2)).unwrap(), 1.0);
        assert!(t.frobenius_distance(&SymTensor3::zeros(3)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = (random_tensor(&mut rng, 3), random_tensor(&mut rng, 3));
        let brute: f64 = a
            .entries()
            .iter()
            .zip(b.entries())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((a.frobenius_distance(&b).unwrap() - brute).abs() <= 1e-12);
    }

    #[test]
    fn deflate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cols: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 4)).collect();
        let scales = [0.5, -2.0, 1.5];
        let a = ComponentMatrix::new(4, cols.clone()).unwrap();
        let t = SymTensor3::from_components(&a, Some(&scales)).unwrap();
        assert!(t.deflate(&a, &scales).unwrap().frobenius_norm() <= 1e-12);

        let empty = ComponentMatrix::new(4, vec![]).unwrap();
        assert_eq!(t.deflate(&empty, &[]).unwrap(), t);

        let other = random_tensor(&mut rng, 4);
        let partial = a.select(&[1]);
        let got = other.deflate(&partial, &[scales[1]]).unwrap();
        let sub = triple_loop(&cols[1..2], &scales[1..2]);
        for ((g, o), s) in got.entries().iter().zip(other.entries()).zip(&sub) {
            assert!((g - (o - s)).abs() <= 1e-12);
        }
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(SymTensor3::<f64>::new(0, vec![]), Err(TensorError::ZeroDimension));
        assert!(matches!(
            SymTensor3::<f64>::new(2, vec![0.0; 7]),
            Err(TensorError::StorageLength { .. })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert_eq!(SymTensor3::<f64>::new(2, v), Err(TensorError::NonFinite));
        assert!(ComponentMatrix::new(2, vec![vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn reads_are_bit_identical_under_permutation(seed in any::<u64>(), d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&mut rng, d);
            for i in 0..d { for j in 0..d { for k in 0..d {
                let v = t.get(i, j, k);
                for w in [t.get(i,k,j), t.get(j,i,k), t.get(j,k,i), t.get(k,i,j), t.get(k,j,i)] {
                    prop_assert_eq!(v.to_bits(), w.to_bits());
                }
            }}}
        }

        #[test]
        fn contraction_is_symmetric_and_linear(seed in any::<u64>(), d in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (t, s) = (random_tensor(&mut rng, d), random_tensor(&mut rng, d));
            let x = random_vec(&mut rng, d);
            let tx = t.contract(&x).unwrap();
            let scale = tx.max_abs().max(1.0);
            for j in 0..d { for k in 0..d {
                prop_assert!((tx[(j, k)] - tx[(k, j)]).abs() <= 1e-14 * scale);
            }}
            let lhs = t.add(&s).unwrap().contract(&x).unwrap();
            let rhs = tx.add(&s.contract(&x).unwrap());
            prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
            let u = random_vec(&mut rng, d);
            let quad = dot(&u, &tx.matvec(&u));
            prop_assert!((t.trilinear(&x, &u, &u).unwrap() - quad).abs() <= 1e-12);
        }

        #[test]
        fn from_components_agrees_with_triple_loop(seed in any::<u64>(), d in 1usize..=10, n in 1usize..=12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, d)).collect();
            let scales: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = SymTensor3::from_components(&ComponentMatrix::new(d, cols.clone()).unwrap(), Some(&scales)).unwrap();
            let oracle = SymTensor3 { dim: d, entries: triple_loop(&cols, &scales) };
            prop_assert!(t.frobenius_distance(&oracle).unwrap() <= 1e-12);
        }
    }
}
