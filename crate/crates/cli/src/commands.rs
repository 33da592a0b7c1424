use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::Serialize;
use serde_json::{json, Value};

use overcomplete::cumulants::SampleSet;
use overcomplete::eval::{match_components, robust_kruskal_rank, MatchReport};
use overcomplete::io::{
    read_json, read_samples, write_components, write_json, write_samples_csv, write_tensor, ComponentsFile,
    DecompositionFile, ParamsFile,
};
use overcomplete::linalg::Matrix;
use overcomplete::mixtures::{
    blind_deconvolve, estimate_gmm, noise_scaled_epsilon, DeconvolutionConfig, DeconvolutionError,
    DiscreteMixtureParams,
};
use overcomplete::overcomplete::{decompose as run_decompose, DecompositionConfig, DecompositionError};
use overcomplete::synth::{gen_components, perturb_tensor, sample_mixture, DeconvolutionStyle, NoiseSpec, Structure};
use overcomplete::tensor::{ComponentMatrix, SymTensor3};

use crate::args::{DecomposeArgs, EvalArgs, Format, MixtureArgs, Style, SynthArgs};
use crate::Failure;

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Manifest<'a, P: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    params: &'a P,
    outputs: Vec<String>,
}

fn write_manifest<P: Serialize>(
    path: &Path,
    command: &str,
    seed: Option<u64>,
    params: &P,
    outputs: &[&Path],
) -> Outcome {
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        params,
        outputs: outputs
            .iter()
            .map(|p| {
                p.file_name()
                    .map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
            })
            .collect(),
    };
    write_json(path, &m)?;
    Ok(())
}

/// `<dir>/<stem>.manifest.json` next to a single output file.
fn manifest_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn parse_values(s: &str, d: usize) -> anyhow::Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number {v:?}")))
        .collect::<anyhow::Result<_>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; d]),
        n if n == d => Ok(vals),
        n => bail!("expected 1 or {d} values, got {n}"),
    }
}

fn parse_noise(spec: &str, d: usize) -> anyhow::Result<NoiseSpec<f64>> {
    if spec == "none" {
        return Ok(NoiseSpec::None);
    }
    let (kind, values) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("noise must be none or KIND:VALUES, got {spec:?}"))?;
    let v = parse_values(values, d)?;
    Ok(match kind {
        "gaussian" => NoiseSpec::Gaussian(Matrix::from_diag(&v.iter().map(|s| s * s).collect::<Vec<_>>())),
        "uniform" => NoiseSpec::UniformBox(v),
        "laplace" => NoiseSpec::Laplace(v),
        other => bail!("unknown noise kind {other:?}"),
    })
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let n = a.n.unwrap_or(a.d);
    if a.k >= n.max(1) || n - a.k > a.d {
        return Err(anyhow!("need k < n and n - k <= d (d={}, n={n}, k={})", a.d, a.k).into());
    }
    let structure = match a.style {
        Style::Random => Structure::RandomUnit,
        Style::NegativeSum => Structure::NegativeSum,
        Style::Deconvolution => Structure::Deconvolution(DeconvolutionStyle {
            rho_range: (a.rho_min, a.rho_max),
            w_min: a.w_min,
            tau: a.tau,
        }),
    };
    if a.samples.is_some() && a.style != Style::Deconvolution {
        return Err(anyhow!("--samples requires --style deconvolution").into());
    }
    let noise = parse_noise(&a.noise, a.d)?;
    let generated = gen_components::<f64>(a.d, n, &structure, a.run.seed)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let mut outputs = Vec::new();
    let components_path = a.out.join("components.json");
    write_components(&components_path, &generated.components)?;
    outputs.push(components_path);

    let mixture = generated.mixture();
    let tensor = match &mixture {
        Some(p) => SymTensor3::from_components(&p.scaled_components(), None)?,
        None => SymTensor3::from_components(&generated.components, None)?,
    };
    let tensor = perturb_tensor(&tensor, a.eps_in, a.run.seed.wrapping_add(1));
    let tensor_path = a.out.join("tensor.json");
    write_tensor(&tensor_path, &tensor)?;
    outputs.push(tensor_path);

    if let Some(p) = &mixture {
        let covariance = match &noise {
            NoiseSpec::Gaussian(s) => Some(s),
            _ => None,
        };
        let params_path = a.out.join("params.json");
        write_json(&params_path, &ParamsFile::<Value>::from_params(p, covariance, None))?;
        outputs.push(params_path);
        if let Some(count) = a.samples {
            let s = sample_mixture(p, &noise, count, a.run.seed.wrapping_add(2))?;
            let samples_path = a.out.join("samples.csv");
            write_samples_csv(&samples_path, &s)?;
            outputs.push(samples_path);
        }
    }

    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    write_manifest(&a.out.join("manifest.json"), "synth", Some(a.run.seed), a, &refs)?;
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn decompose(a: &DecomposeArgs) -> Outcome {
    let tensor = overcomplete::io::read_tensor::<f64>(&a.tensor)?;
    let mut cfg = DecompositionConfig::new(a.epsilon, a.n, a.k, a.norm_bound, a.run.seed);
    cfg.max_attempts = a.max_attempts;
    cfg.threads = a.run.threads.max(1);
    let outcome = run_decompose(&tensor, &cfg);
    write_manifest(&manifest_path(&a.out), "decompose", Some(a.run.seed), a, &[&a.out])?;
    match outcome {
        Ok(r) => {
            write_json(
                &a.out,
                &json!({"status": "success", "result": DecompositionFile::from_result(&r)}),
            )?;
            println!(
                "success after {} attempts, residual {:.3e}",
                r.attempts_used, r.residual_frobenius
            );
            Ok(())
        }
        Err(DecompositionError::AttemptsExhausted(diag)) => {
            let best = diag.best.as_ref().map(DecompositionFile::from_result);
            write_json(
                &a.out,
                &json!({
                    "status": "attempts_exhausted",
                    "attempts": diag.attempts,
                    "stats": {
                        "jennrich_failures": diag.stats.jennrich_failures,
                        "scale_failures": diag.stats.scale_failures,
                        "residual_rejections": diag.stats.residual_rejections,
                        "norm_bound_rejections": diag.stats.norm_bound_rejections,
                    },
                    "best": best,
                }),
            )?;
            Err(Failure::Algorithm(anyhow!(
                "no attempt met the tolerance in {} attempts (best residual {})",
                diag.attempts,
                diag.best
                    .as_ref()
                    .map_or_else(|| "n/a".to_string(), |b| format!("{:.3e}", b.residual_frobenius))
            )))
        }
        Err(e @ DecompositionError::InvalidConfig(_)) => Err(Failure::Input(e.into())),
        Err(e) => Err(Failure::Algorithm(e.into())),
    }
}

/// Ground truth loaded from a components, parameters or decomposition file.
struct Truth {
    components: ComponentMatrix<f64>,
    weights: Option<Vec<f64>>,
    covariance: Option<Matrix<f64>>,
}

fn load_truth(path: &Path) -> anyhow::Result<Truth> {
    let value: Value = read_json(path)?;
    let value = match value.get("result") {
        Some(r) => r.clone(),
        None => value,
    };
    if value.get("columns").is_some() {
        let f: ComponentsFile = serde_json::from_value(value)?;
        return Ok(Truth {
            components: f.to_components()?,
            weights: None,
            covariance: None,
        });
    }
    if value.get("weights").is_some() {
        let f: ParamsFile = serde_json::from_value(value)?;
        let p: DiscreteMixtureParams<f64> = f.to_params()?;
        return Ok(Truth {
            covariance: f.covariance_matrix(),
            weights: Some(p.weights().to_vec()),
            components: p.means().clone(),
        });
    }
    if value.get("xi").is_some() {
        let f: DecompositionFile = serde_json::from_value(value)?;
        return Ok(Truth {
            components: f.components()?,
            weights: None,
            covariance: None,
        });
    }
    bail!(
        "{} is not a components, parameters or decomposition file",
        path.display()
    )
}

fn mixture_failure(e: DeconvolutionError<f64>) -> Failure {
    match e {
        DeconvolutionError::InvalidConfig(_)
        | DeconvolutionError::DimensionTooSmall(_)
        | DeconvolutionError::Samples(_) => Failure::Input(e.into()),
        DeconvolutionError::Decomposition(DecompositionError::InvalidConfig(_)) => Failure::Input(e.into()),
        other => Failure::Algorithm(other.into()),
    }
}

pub fn mixture(a: &MixtureArgs, gmm: bool) -> Outcome {
    let command = if gmm { "gmm" } else { "deconvolve" };
    let samples: SampleSet<f64> = read_samples(&a.samples)?;
    let d = samples.dim();
    let mut cfg = DeconvolutionConfig::new(d, a.run.seed);
    if let Some(e) = a.epsilon {
        cfg.epsilon = e;
    }
    if let Some(f) = a.epsilon_factor {
        cfg.epsilon = noise_scaled_epsilon(&samples, f)?;
    }
    cfg.rho_max = a.rho_max;
    cfg.w_min = a.w_min;
    cfg.tau = a.tau;
    cfg.max_attempts = a.max_attempts;
    cfg.threads = a.run.threads.max(1);
    let truth = a.truth.as_deref().map(load_truth).transpose()?;

    write_manifest(&manifest_path(&a.out), command, Some(a.run.seed), a, &[&a.out])?;
    let (params, diagnostics, covariance, covariance_psd) = if gmm {
        let est = estimate_gmm(&samples, &cfg).map_err(mixture_failure)?;
        (
            est.params.mixture,
            est.diagnostics,
            Some(est.params.covariance),
            Some(est.covariance_psd),
        )
    } else {
        let (p, diag) = blind_deconvolve(&samples, &cfg).map_err(mixture_failure)?;
        (p, diag, None, None)
    };

    let mut diag = serde_json::to_value(&diagnostics)?;
    if !a.emit_centered {
        if let Some(obj) = diag.as_object_mut() {
            obj.remove("centered_means");
            obj.remove("centered_mean_norm");
        }
    }
    let obj = diag.as_object_mut().expect("diagnostics serialize to an object");
    if let Some(psd) = &covariance_psd {
        obj.insert("covariance_psd".into(), json!(psd.to_rows()));
    }
    if let Some(t) = &truth {
        let report = match_components(&t.components, params.means())?;
        obj.insert("match".into(), serde_json::to_value(&report)?);
        if let Some(w) = &t.weights {
            let errs: Vec<f64> = report
                .permutation
                .iter()
                .enumerate()
                .map(|(i, &j)| (params.weights()[i] - w[j]).abs())
                .collect();
            obj.insert(
                "max_weight_error".into(),
                json!(errs.iter().copied().fold(0.0, f64::max)),
            );
            obj.insert("weight_errors".into(), json!(errs));
        }
        if let (Some(tc), Some(c)) = (&t.covariance, &covariance) {
            if tc.rows() == c.rows() && tc.cols() == c.cols() {
                obj.insert("covariance_error_frobenius".into(), json!(c.sub(tc).frobenius_norm()));
                obj.insert("covariance_truth_frobenius".into(), json!(tc.frobenius_norm()));
            }
        }
    }
    let file = ParamsFile::from_params(&params, covariance.as_ref(), Some(diag));
    write_json(&a.out, &file)?;
    println!(
        "recovered {} components after {} attempts, residual {:.3e}",
        params.count(),
        diagnostics.attempts_used,
        diagnostics.residual_frobenius
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    #[serde(flatten)]
    report: MatchReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_robust_kruskal_rank: Option<usize>,
}

pub fn eval(a: &EvalArgs) -> Outcome {
    let truth = load_truth(&a.truth)?;
    let estimate = load_truth(&a.estimate)?;
    let report = match_components(&truth.components, &estimate.components)?;
    let rank = a.tau.map(|t| robust_kruskal_rank(&truth.components, t)).transpose()?;
    let out = EvalReport {
        report,
        tau: a.tau,
        truth_robust_kruskal_rank: rank,
    };
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out)?),
        Format::Table => {
            println!("{:>9} {:>9} {:>12}", "estimate", "truth", "error");
            for (i, (&j, e)) in out
                .report
                .permutation
                .iter()
                .zip(&out.report.per_component_error)
                .enumerate()
            {
                println!("{i:>9} {j:>9} {e:>12.3e}");
            }
            println!("max error  {:.3e}", out.report.max_error);
            println!("mean error {:.3e}", out.report.mean_error);
            if let (Some(t), Some(r)) = (out.tau, out.truth_robust_kruskal_rank) {
                println!("robust Kruskal rank of truth at tau={t}: {r}");
            }
        }
    }
    Ok(())
}
