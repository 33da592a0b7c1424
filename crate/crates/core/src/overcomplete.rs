//! Randomized decomposition of a symmetric tensor `T̃ ≈ Σ_{i∈[n]} a_i^{⊗3}` whose
//! components have Kruskal rank `r = n − k` (overcompleteness `k`).
//!
//! Each attempt draws probes `x, y`, diagonalizes `T̃_x, T̃_y` for the first `r`
//! directions, fits their scales, deflates them, and diagonalizes the residual with
//! fresh probes `x′, y′` for the remaining `k`. The first attempt whose
//! reconstruction is within `ε` of the input and whose component norms respect the
//! bound `2M` is returned.

use rayon::prelude::*;
use thiserror::Error;

use crate::jennrich::{diagonalize, JennrichConfig, JennrichError};
use crate::linalg::{default_rank_tol, svd, LinalgError, Matrix};
use crate::probe::{random_unit_vector, stream_rng};
use crate::scalar::{dot, Real};
use crate::tensor::{ComponentMatrix, SymTensor3, TensorError};

/// `|⟨x, ã_i⟩|` below this makes the scale of `ã_i` unrecoverable from `T_x`.
pub const PROBE_DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionConfig<T> {
    /// Reconstruction tolerance on `‖T′ − T̃‖_F`.
    pub epsilon: T,
    /// Total number of components `n = r + k`.
    pub rank_n: usize,
    pub overcompleteness_k: usize,
    /// Upper bound `M` on the component norms.
    pub norm_bound_m: T,
    pub seed: u64,
    pub max_attempts: usize,
    pub imag_tol: T,
    pub cond_cap: T,
    /// Worker threads for evaluating attempts; results do not depend on it.
    pub threads: usize,
}

impl<T: Real> DecompositionConfig<T> {
    pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

    pub fn new(epsilon: T, rank_n: usize, overcompleteness_k: usize, norm_bound_m: T, seed: u64) -> Self {
        let j = JennrichConfig::<T>::new(1);
        Self {
            epsilon,
            rank_n,
            overcompleteness_k,
            norm_bound_m,
            seed,
            max_attempts: Self::DEFAULT_MAX_ATTEMPTS,
            imag_tol: j.imag_tol,
            cond_cap: j.cond_cap,
            threads: 1,
        }
    }

    /// Kruskal rank `r = n − k`.
    pub fn kruskal_rank(&self) -> usize {
        self.rank_n.saturating_sub(self.overcompleteness_k)
    }

    pub fn validate(&self, dim: usize) -> Result<(), String> {
        if self.rank_n == 0 {
            return Err("rank n must be positive".into());
        }
        if self.overcompleteness_k >= self.rank_n {
            return Err(format!(
                "overcompleteness k = {} must be below n = {}",
                self.overcompleteness_k, self.rank_n
            ));
        }
        if self.kruskal_rank() > dim {
            return Err(format!("r = n - k = {} exceeds dimension {dim}", self.kruskal_rank()));
        }
        if self.overcompleteness_k > dim {
            return Err(format!("k = {} exceeds dimension {dim}", self.overcompleteness_k));
        }
        if !(self.epsilon > T::zero()) || !(self.norm_bound_m > T::zero()) {
            return Err("epsilon and the norm bound must be positive".into());
        }
        if self.max_attempts == 0 {
            return Err("max_attempts must be positive".into());
        }
        Ok(())
    }

    fn jennrich(&self, rank: usize) -> JennrichConfig<T> {
        JennrichConfig {
            rank,
            imag_tol: self.imag_tol,
            cond_cap: self.cond_cap,
        }
    }
}

/// Unit probe vectors used by an attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Probes<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    /// `(x′, y′)` for the deflation phase; absent when `k = 0`.
    pub deflation: Option<(Vec<T>, Vec<T>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult<T> {
    /// `ǎ_i = sign(ξ_i)|ξ_i|^{1/3} ã_i`.
    pub components: ComponentMatrix<T>,
    /// Unit directions `ã_i`.
    pub directions: ComponentMatrix<T>,
    pub scales_xi: Vec<T>,
    pub residual_frobenius: T,
    /// 1-based index of the attempt that produced this result.
    pub attempts_used: usize,
    pub probes: Probes<T>,
}

impl<T: Real> DecompositionResult<T> {
    /// `max_i |ξ_i|^{1/3}`
    pub fn max_component_norm(&self) -> T {
        self.scales_xi.iter().fold(T::zero(), |m, x| m.max(x.abs().cbrt()))
    }

    /// Both termination predicates: `‖T′ − T̃‖_F ≤ ε` and `max_i |ξ_i|^{1/3} ≤ 2M`.
    pub fn satisfies(&self, cfg: &DecompositionConfig<T>) -> bool {
        self.residual_frobenius <= cfg.epsilon && self.max_component_norm() <= T::lit(2.0) * cfg.norm_bound_m
    }
}

/// Tally of why attempts were rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttemptStats {
    pub jennrich_failures: usize,
    pub scale_failures: usize,
    pub residual_rejections: usize,
    pub norm_bound_rejections: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustedDiagnostics<T> {
    pub attempts: usize,
    pub stats: AttemptStats,
    /// Completed candidate with the smallest residual, if any attempt got that far.
    pub best: Option<DecompositionResult<T>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("component directions are rank deficient (σ_min/σ_max = {ratio:e})")]
    RankDeficientComponents { ratio: f64 },
    #[error("probe is orthogonal to component {index} (inner product {inner:e})")]
    ProbeDegenerate { index: usize, inner: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError<T: Real> {
    #[error("invalid decomposition config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("no attempt met the termination rule within {} attempts (best residual {})",
        .0.attempts,
        .0.best.as_ref().map_or("n/a".to_string(), |b| format!("{:e}", b.residual_frobenius.as_f64())))]
    AttemptsExhausted(Box<ExhaustedDiagnostics<T>>),
}

/// Scales `ξ_i = T(x, b̃_i, b̃_i) / ⟨x, ã_i⟩`, where `b̃_i` are the columns of `(Ã⁺)ᵀ`.
///
/// This is the unique minimizer of `‖Ã diag(ξ_i ⟨x, ã_i⟩) Ãᵀ − T_x‖` when `Ã` has full
/// column rank.
pub fn estimate_scales<T: Real>(
    t: &SymTensor3<T>,
    x: &[T],
    directions: &ComponentMatrix<T>,
) -> Result<Vec<T>, ScaleError> {
    let tx = t.contract(x)?;
    scales_from_slice(&tx, x, directions)
}

fn scales_from_slice<T: Real>(tx: &Matrix<T>, x: &[T], directions: &ComponentMatrix<T>) -> Result<Vec<T>, ScaleError> {
    if directions.dim() != x.len() {
        return Err(TensorError::DimensionMismatch {
            expected: directions.dim(),
            found: x.len(),
        }
        .into());
    }
    let a = directions.to_matrix();
    let s = svd(&a)?;
    let tol = default_rank_tol(&a);
    let top = s.singular_values.first().copied().unwrap_or_else(T::zero);
    let bottom = s.singular_values.last().copied().unwrap_or_else(T::zero);
    if directions.count() > directions.dim() || !(bottom > tol * top) {
        let ratio = if top > T::zero() { bottom / top } else { T::zero() };
        return Err(ScaleError::RankDeficientComponents { ratio: ratio.as_f64() });
    }
    let pinv = s.pseudoinverse(tol);
    let degenerate = T::lit(PROBE_DEGENERACY_TOL);
    directions
        .columns()
        .iter()
        .enumerate()
        .map(|(i, col)| {
            let inner = dot(x, col);
            if inner.abs() < degenerate {
                return Err(ScaleError::ProbeDegenerate {
                    index: i,
                    inner: inner.as_f64(),
                });
            }
            let b = pinv.row(i);
            Ok(dot(b, &tx.matvec(b)) / inner)
        })
        .collect()
}

enum AttemptFailure {
    Jennrich,
    Scales,
}

struct Candidate<T> {
    directions: ComponentMatrix<T>,
    xi: Vec<T>,
    residual: T,
    probes: Probes<T>,
}

impl From<JennrichError> for AttemptFailure {
    fn from(_: JennrichError) -> Self {
        AttemptFailure::Jennrich
    }
}

impl From<ScaleError> for AttemptFailure {
    fn from(_: ScaleError) -> Self {
        AttemptFailure::Scales
    }
}

impl From<TensorError> for AttemptFailure {
    fn from(_: TensorError) -> Self {
        AttemptFailure::Scales
    }
}

fn run_attempt<T: Real>(
    t: &SymTensor3<T>,
    cfg: &DecompositionConfig<T>,
    index: usize,
) -> Result<Candidate<T>, AttemptFailure> {
    let d = t.dim();
    let r = cfg.kruskal_rank();
    let k = cfg.overcompleteness_k;
    let mut rng = stream_rng(cfg.seed, index as u64);

    let x: Vec<T> = random_unit_vector(&mut rng, d);
    let y: Vec<T> = random_unit_vector(&mut rng, d);
    let tx = t.contract(&x)?;
    let ty = t.contract(&y)?;
    let leading = diagonalize(&tx, &ty, &cfg.jennrich(r))?;
    let mut xi = scales_from_slice(&tx, &x, &leading)?;

    let (directions, deflation) = if k > 0 {
        let residual = t.deflate(&leading, &xi)?;
        let xp: Vec<T> = random_unit_vector(&mut rng, d);
        let yp: Vec<T> = random_unit_vector(&mut rng, d);
        let rx = residual.contract(&xp)?;
        let ry = residual.contract(&yp)?;
        let rest = diagonalize(&rx, &ry, &cfg.jennrich(k))?;
        xi.extend(scales_from_slice(&rx, &xp, &rest)?);
        (leading.concat(&rest)?, Some((xp, yp)))
    } else {
        (leading, None)
    };

    let rebuilt = SymTensor3::from_components(&directions, Some(&xi))?;
    let residual = rebuilt.frobenius_distance(t)?;
    Ok(Candidate {
        directions,
        xi,
        residual,
        probes: Probes { x, y, deflation },
    })
}

fn finish<T: Real>(c: Candidate<T>, attempt: usize) -> DecompositionResult<T> {
    let roots: Vec<T> = c.xi.iter().map(|v| v.cbrt()).collect();
    let components = c.directions.scale_columns(&roots).expect("one scale per direction");
    DecompositionResult {
        components,
        directions: c.directions,
        scales_xi: c.xi,
        residual_frobenius: c.residual,
        attempts_used: attempt,
        probes: c.probes,
    }
}

/// Runs the randomized search until an attempt satisfies the termination rule.
///
/// Attempt `i` uses the random stream `(cfg.seed, i)`. With `cfg.threads > 1` attempts
/// are evaluated in parallel batches, but the accepted result is always the lowest
/// accepted index, so the output is identical to a sequential run.
pub fn decompose<T: Real>(
    t: &SymTensor3<T>,
    cfg: &DecompositionConfig<T>,
) -> Result<DecompositionResult<T>, DecompositionError<T>> {
    cfg.validate(t.dim()).map_err(DecompositionError::InvalidConfig)?;

    let mut stats = AttemptStats::default();
    let mut best: Option<(usize, Candidate<T>)> = None;
    let two_m = T::lit(2.0) * cfg.norm_bound_m;

    let mut consider =
        |index: usize, outcome: Result<Candidate<T>, AttemptFailure>| -> Option<DecompositionResult<T>> {
            match outcome {
                Err(AttemptFailure::Jennrich) => stats.jennrich_failures += 1,
                Err(AttemptFailure::Scales) => stats.scale_failures += 1,
                Ok(c) => {
                    let max_norm = c.xi.iter().fold(T::zero(), |m, x| m.max(x.abs().cbrt()));
                    let within = c.residual <= cfg.epsilon;
                    let bounded = max_norm <= two_m;
                    if within && bounded {
                        return Some(finish(c, index + 1));
                    }
                    if !within {
                        stats.residual_rejections += 1;
                    }
                    if !bounded {
                        stats.norm_bound_rejections += 1;
                    }
                    if best.as_ref().map_or(true, |(_, b)| c.residual < b.residual) {
                        best = Some((index, c));
                    }
                }
            }
            None
        };

    if cfg.threads <= 1 {
        for index in 0..cfg.max_attempts {
            if let Some(done) = consider(index, run_attempt(t, cfg, index)) {
                return Ok(done);
            }
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .expect("thread pool");
        let batch = cfg.threads * 16;
        let mut start = 0;
        while start < cfg.max_attempts {
            let end = (start + batch).min(cfg.max_attempts);
            let outcomes: Vec<_> =
                pool.install(|| (start..end).into_par_iter().map(|i| run_attempt(t, cfg, i)).collect());
            for (offset, outcome) in outcomes.into_iter().enumerate() {
                if let Some(done) = consider(start + offset, outcome) {
                    return Ok(done);
                }
            }
            start = end;
        }
    }

    Err(DecompositionError::AttemptsExhausted(Box::new(ExhaustedDiagnostics {
        attempts: cfg.max_attempts,
        stats,
        best: best.map(|(i, c)| finish(c, i + 1)),
    })))
}
