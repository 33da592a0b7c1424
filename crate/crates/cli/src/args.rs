use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Overcomplete tensor decomposition and moment-based mixture estimation
#[derive(Parser, Debug)]
#[command(name = "overcomplete", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate ground-truth components, tensors and samples
    Synth(SynthArgs),
    /// Decompose a symmetric order-3 tensor
    Decompose(DecomposeArgs),
    /// Recover a discrete distribution from noisy samples
    Deconvolve(MixtureArgs),
    /// Estimate a Gaussian mixture with shared covariance
    Gmm(MixtureArgs),
    /// Match estimated components against ground truth
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunArgs {
    /// Seed for all randomness
    #[arg(long)]
    pub seed: u64,

    /// Worker threads for the randomized search (results do not depend on it)
    #[arg(long, env = "OVERCOMPLETE_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Style {
    /// Independent uniform unit vectors
    Random,
    /// Unit vectors plus the normalized negative of their sum
    NegativeSum,
    /// Zero-mean discrete mixture with n = d
    Deconvolution,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Ambient dimension
    #[arg(long)]
    pub d: usize,

    /// Number of components (defaults to d)
    #[arg(long)]
    pub n: Option<usize>,

    /// Overcompleteness recorded for the generated instance
    #[arg(long, default_value_t = 0)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = Style::Random)]
    pub style: Style,

    /// Frobenius norm of the symmetric Gaussian perturbation added to tensor.json
    #[arg(long, default_value_t = 0.0)]
    pub eps_in: f64,

    /// Number of mixture samples to draw (deconvolution style)
    #[arg(long)]
    pub samples: Option<usize>,

    /// Additive noise: none, gaussian:S, uniform:H or laplace:B, where each value is a
    /// single number or a comma-separated list per coordinate (standard deviation,
    /// half-width and scale respectively)
    #[arg(long, default_value = "none")]
    pub noise: String,

    #[arg(long, default_value_t = 0.8)]
    pub rho_min: f64,

    #[arg(long, default_value_t = 1.5)]
    pub rho_max: f64,

    #[arg(long, default_value_t = 0.2)]
    pub w_min: f64,

    /// Robust Kruskal threshold the generated means must satisfy
    #[arg(long, default_value_t = 20.0)]
    pub tau: f64,

    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Tensor JSON file
    #[arg(long)]
    pub tensor: PathBuf,

    /// Total number of components
    #[arg(long)]
    pub n: usize,

    /// Overcompleteness (components beyond the Kruskal rank)
    #[arg(long, default_value_t = 0)]
    pub k: usize,

    /// Reconstruction tolerance on the Frobenius residual
    #[arg(long)]
    pub epsilon: f64,

    /// Upper bound on component norms
    #[arg(long, default_value_t = 1.0)]
    pub norm_bound: f64,

    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: usize,

    /// Result JSON file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct MixtureArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Samples as CSV (optional header) or JSON
    #[arg(long)]
    pub samples: PathBuf,

    /// Decomposition tolerance (defaults to 1e-3/sqrt(d))
    #[arg(long, conflicts_with = "epsilon_factor")]
    pub epsilon: Option<f64>,

    /// Set the tolerance to this multiple of the estimated cumulant sampling error
    #[arg(long)]
    pub epsilon_factor: Option<f64>,

    /// Upper bound on the norms of the means
    #[arg(long, default_value_t = 2.0)]
    pub rho_max: f64,

    /// Lower bound on the weights
    #[arg(long, default_value_t = 0.1)]
    pub w_min: f64,

    /// Robust Kruskal threshold
    #[arg(long, default_value_t = 20.0)]
    pub tau: f64,

    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: usize,

    /// Ground-truth components or parameters for an embedded match report
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Include centered-frame values in the diagnostics
    #[arg(long)]
    pub emit_centered: bool,

    /// Parameters JSON file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Table,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Ground-truth components, parameters or decomposition result
    #[arg(long)]
    pub truth: PathBuf,

    /// Estimated components, parameters or decomposition result
    #[arg(long)]
    pub estimate: PathBuf,

    /// Also report the robust Kruskal rank of the truth at this threshold
    #[arg(long)]
    pub tau: Option<f64>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}
