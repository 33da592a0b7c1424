//! Blind deconvolution of a discrete distribution from noisy samples, and
//! estimation of Gaussian mixtures sharing one unknown covariance.
//!
//! Both pipelines center the samples, estimate the third cumulant (which is blind
//! to any zero-mean noise with vanishing third moments), decompose it into `d`
//! components of overcompleteness one, and split the recovered scales
//! `ξ_i = w_i ρ_i³` into weights and norms through the null right singular vector
//! of the scaled component matrix.

use serde::Serialize;
use thiserror::Error;

use crate::cumulants::{center, k3_fast, k3_standard_error, sample_mean, second_moment, CumulantError, SampleSet};
use crate::linalg::{svd, sym_eig, LinalgError, Matrix};
use crate::overcomplete::{decompose, DecompositionConfig, DecompositionError};
use crate::scalar::{norm2, Real};
use crate::tensor::{ComponentMatrix, TensorError};

/// Tolerance on `Σ w_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Relative singular-value cutoff used when checking the rank of the scaled components.
pub const DECOUPLE_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{weights} weights for {means} means")]
    CountMismatch { weights: usize, means: usize },
    #[error("weight {index} is {value}, must be positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("covariance must be a symmetric {dim}x{dim} matrix")]
    Covariance { dim: usize },
}

/// Discrete distribution taking value `μ_i` with probability `w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMixtureParams<T> {
    weights: Vec<T>,
    means: ComponentMatrix<T>,
}

impl<T: Real> DiscreteMixtureParams<T> {
    pub fn new(weights: Vec<T>, means: ComponentMatrix<T>) -> Result<Self, ParamsError> {
        if weights.len() != means.count() {
            return Err(ParamsError::CountMismatch {
                weights: weights.len(),
                means: means.count(),
            });
        }
        if let Some((index, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > T::zero())) {
            return Err(ParamsError::NonPositiveWeight {
                index,
                value: w.as_f64(),
            });
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs().as_f64() > WEIGHT_SUM_TOL {
            return Err(ParamsError::WeightSum(total.as_f64()));
        }
        Ok(Self { weights, means })
    }

    pub fn dim(&self) -> usize {
        self.means.dim()
    }

    pub fn count(&self) -> usize {
        self.means.count()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn means(&self) -> &ComponentMatrix<T> {
        &self.means
    }

    /// Norms `ρ_i = ‖μ_i‖₂`.
    pub fn rho(&self) -> Vec<T> {
        self.means.norms()
    }

    /// Unit directions `μ_i / ρ_i` (zero means stay zero).
    pub fn directions(&self) -> ComponentMatrix<T> {
        let factors: Vec<T> = self
            .rho()
            .into_iter()
            .map(|r| if r > T::zero() { r.recip() } else { T::zero() })
            .collect();
        self.means.scale_columns(&factors).expect("one factor per column")
    }

    /// `Σ w_i μ_i`.
    pub fn mean(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (w, mu) in self.weights.iter().zip(self.means.columns()) {
            out.iter_mut().zip(mu).for_each(|(o, &m)| *o += *w * m);
        }
        out
    }

    /// Same weights with every mean shifted by `offset`.
    pub fn translated(&self, offset: &[T]) -> Self {
        let cols = self
            .means
            .columns()
            .iter()
            .map(|c| c.iter().zip(offset).map(|(&a, &b)| a + b).collect())
            .collect();
        Self {
            weights: self.weights.clone(),
            means: ComponentMatrix::new(self.dim(), cols).expect("same dimension"),
        }
    }

    /// Scaled components `w_i^{1/3} μ_i`, whose cubes sum to the third cumulant when
    /// the mixture has zero mean.
    pub fn scaled_components(&self) -> ComponentMatrix<T> {
        let f: Vec<T> = self.weights.iter().map(|w| w.cbrt()).collect();
        self.means.scale_columns(&f).expect("one factor per column")
    }

    pub fn cast<U: Real>(&self) -> DiscreteMixtureParams<U> {
        DiscreteMixtureParams {
            weights: self.weights.iter().map(|w| U::lit(w.as_f64())).collect(),
            means: self.means.cast(),
        }
    }
}

/// Mixture of `N(μ_i, Σ)` with a covariance shared by all components.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams<T> {
    pub mixture: DiscreteMixtureParams<T>,
    pub covariance: Matrix<T>,
}

impl<T: Real> GmmParams<T> {
    /// Checks that the covariance is `d × d` and symmetric within `1e-12`.
    pub fn new(mixture: DiscreteMixtureParams<T>, covariance: Matrix<T>) -> Result<Self, ParamsError> {
        let d = mixture.dim();
        let symmetric = covariance.rows() == d
            && covariance.cols() == d
            && covariance.sub(&covariance.transpose()).max_abs().as_f64() <= 1e-12;
        if !symmetric {
            return Err(ParamsError::Covariance { dim: d });
        }
        Ok(Self { mixture, covariance })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvolutionConfig<T> {
    /// Reconstruction tolerance for the inner decomposition.
    pub epsilon: T,
    /// Upper bound on `‖μ_i‖₂`.
    pub rho_max: T,
    /// Lower bound on the weights.
    pub w_min: T,
    /// Robust Kruskal threshold of the means.
    pub tau: T,
    pub seed: u64,
    pub max_attempts: usize,
    pub threads: usize,
}

impl<T: Real> DeconvolutionConfig<T> {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            epsilon: Self::default_epsilon(dim),
            rho_max: T::lit(2.0),
            w_min: T::lit(0.1),
            tau: T::lit(20.0),
            seed,
            max_attempts: DecompositionConfig::<T>::DEFAULT_MAX_ATTEMPTS,
            threads: 1,
        }
    }

    /// `10⁻³ / √d`.
    pub fn default_epsilon(dim: usize) -> T {
        T::lit(1e-3) / T::from_count(dim).sqrt()
    }

    pub fn validate(&self, count: usize) -> Result<(), String> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.epsilon) {
            return Err("epsilon must be positive".into());
        }
        if !positive(self.rho_max) {
            return Err("rho_max must be positive".into());
        }
        if !positive(self.tau) {
            return Err("tau must be positive".into());
        }
        if !positive(self.w_min) || self.w_min >= T::one() {
            return Err("w_min must lie in (0, 1)".into());
        }
        if count > 0 && self.w_min.as_f64() > 1.0 / count as f64 + 1e-12 {
            return Err(format!("w_min must not exceed 1/{count}"));
        }
        if self.max_attempts == 0 {
            return Err("max_attempts must be positive".into());
        }
        Ok(())
    }
}

/// Tolerance matched to the sampling noise of the third k-statistic: `factor` times
/// its estimated Frobenius standard error.
pub fn noise_scaled_epsilon<T: Real>(samples: &SampleSet<T>, factor: T) -> Result<T, CumulantError> {
    Ok(factor * k3_standard_error(samples)?)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecoupleError {
    #[error("expected {dim} scaled components in dimension {dim}, got {count}")]
    Shape { dim: usize, count: usize },
    #[error("{xi} scales for {count} components")]
    ScaleCount { xi: usize, count: usize },
    #[error("scaled components have numerical rank {rank}, need at least {needed}")]
    RankTooLow { rank: usize, needed: usize },
    #[error("null singular vector has non-positive entry {value} at index {index}")]
    NonPositiveSingularVector { index: usize, value: f64, vector: Vec<f64> },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoupled<T> {
    pub params: DiscreteMixtureParams<T>,
    /// Sign-fixed right singular vector of the smallest singular value.
    pub null_vector: Vec<T>,
    /// Singular values of the scaled component matrix, nonincreasing.
    pub singular_values: Vec<T>,
}

/// Splits scaled components `ǎ_i = w_i^{1/3} μ_i` into weights and means.
///
/// With `ṽ` the right singular vector of the smallest singular value of
/// `Ǎ = [ǎ_1 … ǎ_d]`, sign-flipped so its entries sum to a positive number, the
/// weights are `ṽ^{3/2} / Σ ṽ_i^{3/2}` and the means `w_i^{−1/3} ǎ_i`.
pub fn decouple<T: Real>(scaled: &ComponentMatrix<T>, xi: &[T]) -> Result<Decoupled<T>, DecoupleError> {
    let d = scaled.dim();
    let n = scaled.count();
    if n != d {
        return Err(DecoupleError::Shape { dim: d, count: n });
    }
    if xi.len() != n {
        return Err(DecoupleError::ScaleCount { xi: xi.len(), count: n });
    }
    let s = svd(&scaled.to_matrix())?;
    let rank = s.rank(T::lit(DECOUPLE_RANK_TOL));
    if rank + 1 < d {
        return Err(DecoupleError::RankTooLow { rank, needed: d - 1 });
    }
    let mut v = s.right_vectors.column(d - 1);
    if v.iter().copied().sum::<T>() < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(**x > T::zero())) {
        return Err(DecoupleError::NonPositiveSingularVector {
            index,
            value: value.as_f64(),
            vector: v.iter().map(|x| x.as_f64()).collect(),
        });
    }
    let powered: Vec<T> = v.iter().map(|&x| x * x.sqrt()).collect();
    let total: T = powered.iter().copied().sum();
    let weights: Vec<T> = powered.iter().map(|&p| p / total).collect();
    let factors: Vec<T> = weights.iter().map(|w| w.cbrt().recip()).collect();
    let means = scaled.scale_columns(&factors).expect("one factor per column");
    let params = DiscreteMixtureParams::new(weights, means).expect("weights on the simplex");
    Ok(Decoupled {
        params,
        null_vector: v,
        singular_values: s.singular_values,
    })
}

#[derive(Debug, Error)]
pub enum DeconvolutionError<T: Real> {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("blind deconvolution needs dimension at least 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("sample statistics: {0}")]
    Samples(#[from] CumulantError),
    #[error("cumulant decomposition: {0}")]
    Decomposition(#[from] DecompositionError<T>),
    #[error("decoupling weights from norms: {0}")]
    Decouple(#[from] DecoupleError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeconvolutionDiagnostics {
    pub sample_count: usize,
    pub sample_mean: Vec<f64>,
    pub epsilon: f64,
    pub residual_frobenius: f64,
    pub attempts_used: usize,
    pub cumulant_frobenius: f64,
    pub scales_xi: Vec<f64>,
    /// Singular values of the recovered scaled components.
    pub singular_values: Vec<f64>,
    pub null_vector: Vec<f64>,
    /// Means before translating back by the sample mean.
    pub centered_means: Vec<Vec<f64>>,
    /// `‖Σ w̃_i μ̃_i‖₂` in the centered frame.
    pub centered_mean_norm: f64,
}

/// Recovers the weights and means of `Z` from samples of `X = Z + η`, where `η` is
/// independent noise with zero mean and zero third moments.
pub fn blind_deconvolve<T: Real>(
    samples: &SampleSet<T>,
    cfg: &DeconvolutionConfig<T>,
) -> Result<(DiscreteMixtureParams<T>, DeconvolutionDiagnostics), DeconvolutionError<T>> {
    let d = samples.dim();
    if d < 3 {
        return Err(DeconvolutionError::DimensionTooSmall(d));
    }
    cfg.validate(d).map_err(DeconvolutionError::InvalidConfig)?;
    let mean = sample_mean(samples)?;
    let cumulant = k3_fast(samples)?;

    let mut dcfg = DecompositionConfig::new(cfg.epsilon, d, 1, cfg.rho_max, cfg.seed);
    dcfg.max_attempts = cfg.max_attempts;
    dcfg.threads = cfg.threads;
    let result = decompose(&cumulant, &dcfg)?;

    let dec = decouple(&result.components, &result.scales_xi)?;
    let centered = dec.params.clone();
    let params = centered.translated(&mean);

    let to_f64 = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
    let diagnostics = DeconvolutionDiagnostics {
        sample_count: samples.count(),
        sample_mean: to_f64(&mean),
        epsilon: cfg.epsilon.as_f64(),
        residual_frobenius: result.residual_frobenius.as_f64(),
        attempts_used: result.attempts_used,
        cumulant_frobenius: cumulant.frobenius_norm().as_f64(),
        scales_xi: to_f64(&result.scales_xi),
        singular_values: to_f64(&dec.singular_values),
        null_vector: to_f64(&dec.null_vector),
        centered_means: centered.means().columns().iter().map(|c| to_f64(c)).collect(),
        centered_mean_norm: norm2(&centered.mean()).as_f64(),
    };
    Ok((params, diagnostics))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmEstimate<T> {
    /// Means in the original frame and the raw symmetrized covariance estimate.
    pub params: GmmParams<T>,
    /// Raw covariance with negative eigenvalues clamped to zero.
    pub covariance_psd: Matrix<T>,
    pub diagnostics: DeconvolutionDiagnostics,
    /// Eigenvalues of the raw covariance, nonincreasing.
    pub covariance_eigenvalues: Vec<f64>,
}

/// Estimates a Gaussian mixture with shared covariance: blind deconvolution for the
/// weights and means, then `Σ̃ = (1/N) Σ_j x_j x_jᵀ − Σ_i w̃_i μ̃_i μ̃_iᵀ` in the
/// centered frame.
pub fn estimate_gmm<T: Real>(
    samples: &SampleSet<T>,
    cfg: &DeconvolutionConfig<T>,
) -> Result<GmmEstimate<T>, DeconvolutionError<T>> {
    let (params, diagnostics) = blind_deconvolve(samples, cfg)?;
    let centered_samples = center(samples)?;
    let d = samples.dim();
    let mut cov = second_moment(&centered_samples)?;
    for (w, mu) in params.weights().iter().zip(&diagnostics.centered_means) {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] -= *w * T::lit(mu[i] * mu[j]);
            }
        }
    }
    let cov = cov.symmetrized();
    let eig = sym_eig(&cov).map_err(DecoupleError::from)?;
    let clamped: Vec<T> = eig.eigenvalues.iter().map(|&l| l.max(T::zero())).collect();
    let v = &eig.eigenvectors;
    let psd = Matrix::from_fn(d, d, |i, j| (0..d).map(|k| v[(i, k)] * clamped[k] * v[(j, k)]).sum()).symmetrized();
    let covariance_eigenvalues = eig.eigenvalues.iter().map(|x| x.as_f64()).collect();
    Ok(GmmEstimate {
        params: GmmParams::new(params, cov).expect("symmetrized covariance"),
        covariance_psd: psd,
        diagnostics,
        covariance_eigenvalues,
    })
}
