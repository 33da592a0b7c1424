//! Sample moments and unbiased third-cumulant estimation (k-statistics).

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::tensor::SymTensor3;

/// Rows per chunk when accumulating sums; the reduction order is fixed by chunk index.
const CHUNK_ROWS: usize = 4096;

/// Largest sample count accepted by the cubic-cost reference estimator.
pub const NAIVE_MAX_SAMPLES: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CumulantError {
    #[error("sample set is empty")]
    Empty,
    #[error("sample dimension must be positive")]
    ZeroDimension,
    #[error("row {row} has length {found}, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("reference estimator is limited to {max} samples, got {found}")]
    TooManySamples { max: usize, found: usize },
}

/// `N` iid samples in `ℝ^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SampleSet<T> {
    pub fn new(dim: usize, rows: Vec<Vec<T>>) -> Result<Self, CumulantError> {
        if dim == 0 {
            return Err(CumulantError::ZeroDimension);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(CumulantError::RaggedRow {
                    row: i,
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend(r);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self, CumulantError> {
        if dim == 0 {
            return Err(CumulantError::ZeroDimension);
        }
        if data.len() % dim != 0 {
            return Err(CumulantError::RaggedRow {
                row: data.len() / dim,
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(CumulantError::NonFinite { row: pos / dim });
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    fn require(&self, needed: usize) -> Result<(), CumulantError> {
        match self.count() {
            0 => Err(CumulantError::Empty),
            n if n < needed => Err(CumulantError::TooFewSamples { needed, found: n }),
            _ => Ok(()),
        }
    }

    /// Sums `f(row)` chunk by chunk in parallel and reduces partial sums in chunk order.
    fn chunked_sum(&self, len: usize, f: impl Fn(&[T], &mut [T]) + Sync) -> Vec<T> {
        let partials: Vec<Vec<T>> = self
            .data
            .par_chunks(CHUNK_ROWS * self.dim)
            .map(|chunk| {
                let mut acc = vec![T::zero(); len];
                for row in chunk.chunks_exact(self.dim) {
                    f(row, &mut acc);
                }
                acc
            })
            .collect();
        let mut total = vec![T::zero(); len];
        for p in partials {
            total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
        }
        total
    }
}

/// Arithmetic mean of the rows.
pub fn sample_mean<T: Real>(s: &SampleSet<T>) -> Result<Vec<T>, CumulantError> {
    s.require(1)?;
    let sum = s.chunked_sum(s.dim, |row, acc| {
        acc.iter_mut().zip(row).for_each(|(a, &x)| *a += x);
    });
    let n = T::from_count(s.count());
    Ok(sum.into_iter().map(|v| v / n).collect())
}

/// Subtracts the sample mean from every row.
pub fn center<T: Real>(s: &SampleSet<T>) -> Result<SampleSet<T>, CumulantError> {
    let mean = sample_mean(s)?;
    Ok(translate(s, &mean))
}

/// Subtracts `offset` from every row.
pub fn translate<T: Real>(s: &SampleSet<T>, offset: &[T]) -> SampleSet<T> {
    assert_eq!(offset.len(), s.dim);
    let data = s
        .data
        .chunks_exact(s.dim)
        .flat_map(|row| row.iter().zip(offset).map(|(&x, &m)| x - m))
        .collect();
    SampleSet { dim: s.dim, data }
}

/// `(1/N) Σ_j x_j x_jᵀ` (uncentered).
pub fn second_moment<T: Real>(s: &SampleSet<T>) -> Result<Matrix<T>, CumulantError> {
    s.require(1)?;
    let d = s.dim;
    let sum = s.chunked_sum(d * d, |row, acc| {
        for i in 0..d {
            for j in i..d {
                acc[i * d + j] += row[i] * row[j];
            }
        }
    });
    let n = T::from_count(s.count());
    Ok(Matrix::from_fn(d, d, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        sum[a * d + b] / n
    }))
}

/// Sorted index triples `i ≤ j ≤ k` in a fixed order.
fn sorted_triples(d: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) * (d + 2) / 6);
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                out.push((i, j, k));
            }
        }
    }
    out
}

/// Third k-statistic `k₃ = N / ((N−1)(N−2)) · Σ_j (x_j − x̄)^{⊗3}`, computed in one
/// pass over the centered samples.
pub fn k3_fast<T: Real>(s: &SampleSet<T>) -> Result<SymTensor3<T>, CumulantError> {
    s.require(3)?;
    let centered = center(s)?;
    let triples = sorted_triples(s.dim);
    let sums = centered.chunked_sum(triples.len(), |row, acc| {
        for (a, &(i, j, k)) in acc.iter_mut().zip(&triples) {
            *a += row[i] * row[j] * row[k];
        }
    });
    let n = T::from_count(s.count());
    let factor = n / ((n - T::one()) * (n - T::lit(2.0)));
    let mut values = sums.into_iter().map(|v| v * factor);
    Ok(SymTensor3::from_sorted_fn(s.dim, |_, _, _| {
        values.next().expect("one value per sorted triple")
    }))
}

/// Third k-statistic as the weighted triple sum over sample indices,
/// `k₃(r,s,t) = (1/N) Σ_{i,j,k} φ^{(ijk)} (x_i)_r (x_j)_s (x_k)_t`, with
/// `φ^{(iii)} = 1`, `φ^{(iij)} = −1/(N−1)` and `φ^{(ijk)} = 2/((N−1)(N−2))` for distinct
/// indices. Costs `O(N³d³)`; it exists as a reference for [`k3_fast`].
pub fn k3_naive<T: Real>(s: &SampleSet<T>) -> Result<SymTensor3<T>, CumulantError> {
    s.require(3)?;
    let n = s.count();
    if n > NAIVE_MAX_SAMPLES {
        return Err(CumulantError::TooManySamples {
            max: NAIVE_MAX_SAMPLES,
            found: n,
        });
    }
    let nf = T::from_count(n);
    let phi = |i: usize, j: usize, k: usize| -> T {
        if i == j && j == k {
            T::one()
        } else if i == j || j == k || i == k {
            -T::one() / (nf - T::one())
        } else {
            T::lit(2.0) / ((nf - T::one()) * (nf - T::lit(2.0)))
        }
    };
    let d = s.dim;
    let mut entries = vec![T::zero(); d * d * d];
    for r in 0..d {
        for q in 0..d {
            for t in 0..d {
                let mut acc = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            acc += phi(i, j, k) * s.row(i)[r] * s.row(j)[q] * s.row(k)[t];
                        }
                    }
                }
                entries[(r * d + q) * d + t] = acc / nf;
            }
        }
    }
    Ok(SymTensor3::new(d, entries).expect("finite entries"))
}

/// Estimated Frobenius norm of the sampling error of [`k3_fast`].
///
/// Uses the first-order influence function of the third central moment,
/// `ψ_j = c_j^{⊗3} − 3·sym(S ⊗ c_j) − K₃` with `c_j` the centered rows and `S` their
/// covariance, so that `Var k₃(r,s,t) ≈ mean(ψ²) / N` for every entry.
pub fn k3_standard_error<T: Real>(s: &SampleSet<T>) -> Result<T, CumulantError> {
    s.require(3)?;
    let d = s.dim;
    let centered = center(s)?;
    let cov = second_moment(&centered)?;
    let k3 = k3_fast(s)?;
    let triples = sorted_triples(d);
    let sumsq = centered.chunked_sum(triples.len(), |c, acc| {
        for (a, &(i, j, k)) in acc.iter_mut().zip(&triples) {
            let psi =
                c[i] * c[j] * c[k] - cov[(i, j)] * c[k] - cov[(i, k)] * c[j] - cov[(j, k)] * c[i] - k3.get(i, j, k);
            *a += psi * psi;
        }
    });
    let n = T::from_count(s.count());
    let total: T = triples
        .iter()
        .zip(sumsq)
        .map(|(&(i, j, k), v)| {
            let mult = if i == j && j == k {
                1.0
            } else if i == j || j == k {
                3.0
            } else {
                6.0
            };
            T::lit(mult) * v / n / n
        })
        .sum();
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn univariate(xs: &[f64]) -> SampleSet<f64> {
        SampleSet::new(1, xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn mean_cases() {
        let s = SampleSet::new(2, vec![vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(sample_mean(&s).unwrap(), vec![2.0, 2.0]);
        let s = SampleSet::new(3, vec![vec![0.5, -1.0, 2.0]]).unwrap();
        assert_eq!(sample_mean(&s).unwrap(), vec![0.5, -1.0, 2.0]);
        let empty = SampleSet::<f64>::new(2, vec![]).unwrap();
        assert_eq!(sample_mean(&empty), Err(CumulantError::Empty));
    }

    #[test]
    fn center_cases() {
        let s = SampleSet::new(2, vec![vec![1.0, -2.0], vec![-1.0, 2.0]]).unwrap();
        assert_eq!(center(&s).unwrap(), s);
        let s = SampleSet::new(2, vec![vec![4.0, 5.0]; 3]).unwrap();
        assert!(center(&s).unwrap().as_row_major().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_moment_cases() {
        let s = SampleSet::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(second_moment(&s).unwrap().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let s = SampleSet::new(2, vec![vec![0.0, 0.0]; 4]).unwrap();
        assert_eq!(second_moment(&s).unwrap().as_slice(), &[0.0; 4]);
    }

    #[test]
    fn k3_univariate_values() {
        for est in [k3_fast::<f64>, k3_naive::<f64>] {
            assert!(est(&univariate(&[-1.0, 0.0, 1.0])).unwrap().get(0, 0, 0).abs() < 1e-15);
            // N Σ(x − x̄)³ / ((N−1)(N−2)) = 3 · 6 / 2
            assert!((est(&univariate(&[0.0, 0.0, 3.0])).unwrap().get(0, 0, 0) - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k3_constant_coordinate_vanishes() {
        let rows: Vec<Vec<f64>> = vec![vec![0.3, 2.0], vec![-1.2, 2.0], vec![2.5, 2.0], vec![0.1, 2.0]];
        let s = SampleSet::new(2, rows).unwrap();
        for t in [k3_fast(&s).unwrap(), k3_naive(&s).unwrap()] {
            for (i, j, k) in [(0, 0, 1), (0, 1, 1), (1, 1, 1)] {
                assert!(t.get(i, j, k).abs() < 1e-12);
            }
            assert!(t.get(0, 0, 0).abs() > 0.1);
        }
    }

    #[test]
    fn too_few_samples() {
        let s = univariate(&[1.0, 2.0]);
        assert_eq!(k3_fast(&s), Err(CumulantError::TooFewSamples { needed: 3, found: 2 }));
        assert_eq!(k3_naive(&s), Err(CumulantError::TooFewSamples { needed: 3, found: 2 }));
        let big = univariate(&vec![1.0; NAIVE_MAX_SAMPLES + 1]);
        assert!(matches!(k3_naive(&big), Err(CumulantError::TooManySamples { .. })));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            SampleSet::new(2, vec![vec![1.0, 2.0], vec![1.0]]),
            Err(CumulantError::RaggedRow { row: 1, .. })
        ));
        assert_eq!(
            SampleSet::new(1, vec![vec![1.0], vec![f64::NAN]]),
            Err(CumulantError::NonFinite { row: 1 })
        );
    }
}
