//! Seeded synthetic ground truth: component sets, mixture samples, and tensor
//! perturbations.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use thiserror::Error;

use crate::cumulants::SampleSet;
use crate::eval::{robust_kruskal_rank, EvalError};
use crate::linalg::{sym_eig, LinalgError, Matrix};
use crate::mixtures::DiscreteMixtureParams;
use crate::probe::random_unit_vector;
use crate::scalar::{norm2, Real};
use crate::tensor::{ComponentMatrix, SymTensor3};

/// Regeneration cap for constrained component sets.
pub const MAX_REGENERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("no admissible component set after {0} draws")]
    RegenerationLimit(usize),
    #[error("invalid noise: {0}")]
    Noise(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Constraints for component sets in the blind deconvolution setting.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvolutionStyle<T> {
    /// Inclusive range for every `ρ_i = ‖μ_i‖₂`.
    pub rho_range: (T, T),
    pub w_min: T,
    /// The means must have robust Kruskal rank at least `d − 1` at this threshold.
    pub tau: T,
}

impl<T: Real> Default for DeconvolutionStyle<T> {
    fn default() -> Self {
        Self {
            rho_range: (T::lit(0.8), T::lit(1.5)),
            w_min: T::lit(0.2),
            tau: T::lit(20.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Structure<T> {
    /// Independent uniform unit columns.
    RandomUnit,
    /// `n − 1` uniform unit columns and the normalized negative of their sum.
    NegativeSum,
    /// `d` means with weights satisfying `Σ w_i μ_i = 0`.
    Deconvolution(DeconvolutionStyle<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated<T> {
    pub components: ComponentMatrix<T>,
    /// Present for the deconvolution structure.
    pub weights: Option<Vec<T>>,
}

impl<T: Real> Generated<T> {
    pub fn mixture(&self) -> Option<DiscreteMixtureParams<T>> {
        let w = self.weights.clone()?;
        DiscreteMixtureParams::new(w, self.components.clone()).ok()
    }
}

pub fn gen_components<T: Real>(
    d: usize,
    n: usize,
    structure: &Structure<T>,
    seed: u64,
) -> Result<Generated<T>, SynthError> {
    if d == 0 || n == 0 {
        return Err(SynthError::Infeasible("dimension and count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match structure {
        Structure::RandomUnit => Ok(Generated {
            components: ComponentMatrix::new(d, (0..n).map(|_| random_unit_vector(&mut rng, d)).collect())
                .expect("dimension"),
            weights: None,
        }),
        Structure::NegativeSum => {
            if n < 2 {
                return Err(SynthError::Infeasible("negative-sum structure needs n >= 2".into()));
            }
            let mut cols: Vec<Vec<T>> = (0..n - 1).map(|_| random_unit_vector(&mut rng, d)).collect();
            let mut s = vec![T::zero(); d];
            for c in &cols {
                s.iter_mut().zip(c).for_each(|(a, &x)| *a -= x);
            }
            let norm = norm2(&s);
            if !(norm > T::zero()) {
                return Err(SynthError::Infeasible("columns sum to zero".into()));
            }
            cols.push(s.into_iter().map(|x| x / norm).collect());
            Ok(Generated {
                components: ComponentMatrix::new(d, cols).expect("dimension"),
                weights: None,
            })
        }
        Structure::Deconvolution(style) => gen_deconvolution(d, n, style, &mut rng),
    }
}

fn gen_deconvolution<T: Real>(
    d: usize,
    n: usize,
    style: &DeconvolutionStyle<T>,
    rng: &mut ChaCha8Rng,
) -> Result<Generated<T>, SynthError> {
    if n != d || d < 2 {
        return Err(SynthError::Infeasible(format!(
            "deconvolution structure needs n = d >= 2, got d={d}, n={n}"
        )));
    }
    let (lo, hi) = style.rho_range;
    if !(lo > T::zero() && lo <= hi) {
        return Err(SynthError::Infeasible("rho range must satisfy 0 < lo <= hi".into()));
    }
    let slack = T::one() - T::from_count(d) * style.w_min;
    if !(style.w_min > T::zero()) || slack < T::zero() {
        return Err(SynthError::Infeasible(format!("w_min must lie in (0, 1/{d}]")));
    }
    for _ in 0..MAX_REGENERATIONS {
        // w = w_min + slack · Dirichlet(1, …, 1)
        let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = e.iter().sum();
        let weights: Vec<T> = e.iter().map(|&x| style.w_min + slack * T::lit(x / total)).collect();
        let mut cols: Vec<Vec<T>> = (0..d - 1)
            .map(|_| {
                let u: Vec<T> = random_unit_vector(rng, d);
                let rho = lo + (hi - lo) * T::lit(rng.gen::<f64>());
                u.into_iter().map(|x| x * rho).collect()
            })
            .collect();
        let mut last = vec![T::zero(); d];
        for (w, c) in weights.iter().zip(&cols) {
            last.iter_mut().zip(c).for_each(|(a, &x)| *a -= *w * x);
        }
        let wd = weights[d - 1];
        last.iter_mut().for_each(|x| *x /= wd);
        let rho_last = norm2(&last);
        if rho_last < lo || rho_last > hi {
            continue;
        }
        cols.push(last);
        let components = ComponentMatrix::new(d, cols).expect("dimension");
        if robust_kruskal_rank(&components, style.tau)? + 1 < d {
            continue;
        }
        return Ok(Generated {
            components,
            weights: Some(weights),
        });
    }
    Err(SynthError::RegenerationLimit(MAX_REGENERATIONS))
}

/// Zero-mean noise families with vanishing odd moments.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec<T> {
    None,
    Gaussian(Matrix<T>),
    /// Uniform on `[−h_i, h_i]` per coordinate.
    UniformBox(Vec<T>),
    /// Laplace with scale `b_i` per coordinate (standard deviation `√2·b_i`).
    Laplace(Vec<T>),
}

impl<T: Real> NoiseSpec<T> {
    pub fn validate(&self, d: usize) -> Result<(), SynthError> {
        let check_scales = |v: &[T]| {
            if v.len() != d {
                return Err(SynthError::Noise(format!("{} scales for dimension {d}", v.len())));
            }
            if v.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
                return Err(SynthError::Noise("scales must be positive".into()));
            }
            Ok(())
        };
        match self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::UniformBox(h) | NoiseSpec::Laplace(h) => check_scales(h),
            NoiseSpec::Gaussian(s) => {
                if s.rows() != d || s.cols() != d {
                    return Err(SynthError::Noise("covariance shape".into()));
                }
                if s.sub(&s.transpose()).max_abs().as_f64() > 1e-12 {
                    return Err(SynthError::Noise("covariance not symmetric".into()));
                }
                let eig = sym_eig(s)?;
                if eig.eigenvalues.iter().any(|&l| l.as_f64() < -1e-12) {
                    return Err(SynthError::Noise("covariance not positive semidefinite".into()));
                }
                Ok(())
            }
        }
    }

    /// Per-coordinate standard deviations.
    pub fn std_devs(&self, d: usize) -> Vec<T> {
        match self {
            NoiseSpec::None => vec![T::zero(); d],
            NoiseSpec::Gaussian(s) => (0..d).map(|i| s[(i, i)].sqrt()).collect(),
            NoiseSpec::UniformBox(h) => h.iter().map(|&x| x / T::lit(3.0).sqrt()).collect(),
            NoiseSpec::Laplace(b) => b.iter().map(|&x| x * T::lit(2.0).sqrt()).collect(),
        }
    }
}

/// Draws `N` rows of `X = Z + η`, with `Z = μ_i` with probability `w_i`.
pub fn sample_mixture<T: Real>(
    params: &DiscreteMixtureParams<T>,
    noise: &NoiseSpec<T>,
    count: usize,
    seed: u64,
) -> Result<SampleSet<T>, SynthError> {
    let d = params.dim();
    noise.validate(d)?;
    let root = match noise {
        NoiseSpec::Gaussian(s) => {
            let eig = sym_eig(s)?;
            let v = &eig.eigenvectors;
            let l: Vec<T> = eig.eigenvalues.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
            Some(Matrix::from_fn(d, d, |i, j| v[(i, j)] * l[j]))
        }
        _ => None,
    };
    let weights: Vec<f64> = params.weights().iter().map(|w| w.as_f64()).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| SynthError::Infeasible(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(count * d);
    let mut z = vec![T::zero(); d];
    for _ in 0..count {
        let mu = params.means().column(pick.sample(&mut rng));
        match noise {
            NoiseSpec::None => data.extend_from_slice(mu),
            NoiseSpec::Gaussian(_) => {
                z.iter_mut()
                    .for_each(|x| *x = T::lit(rng.sample::<f64, _>(StandardNormal)));
                let eta = root.as_ref().expect("root computed").matvec(&z);
                data.extend(mu.iter().zip(eta).map(|(&m, e)| m + e));
            }
            NoiseSpec::UniformBox(h) => {
                data.extend(
                    mu.iter()
                        .zip(h)
                        .map(|(&m, &hw)| m + hw * T::lit(rng.gen_range(-1.0..1.0))),
                );
            }
            NoiseSpec::Laplace(b) => {
                data.extend(mu.iter().zip(b).map(|(&m, &s)| {
                    // inverse CDF of the standard Laplace
                    let u: f64 = rng.gen::<f64>() - 0.5;
                    let lap = -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                    m + s * T::lit(lap)
                }));
            }
        }
    }
    Ok(SampleSet::from_row_major(d, data).expect("finite samples"))
}

/// Adds a symmetrized Gaussian tensor rescaled to Frobenius norm exactly `eps_in`.
pub fn perturb_tensor<T: Real>(t: &SymTensor3<T>, eps_in: T, seed: u64) -> SymTensor3<T> {
    if eps_in == T::zero() {
        return t.clone();
    }
    let d = t.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<T> = (0..d * d * d)
        .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let g = SymTensor3::new(d, raw).expect("finite");
    let norm = g.frobenius_norm();
    let noise = g.scale(eps_in / norm);
    t.add(&noise).expect("same dimension")
}
