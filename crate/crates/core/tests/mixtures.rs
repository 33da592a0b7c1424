use overcomplete::cumulants::{k3_standard_error, SampleSet};
use overcomplete::eval::match_components;
use overcomplete::linalg::{sym_eig, Matrix};
use overcomplete::mixtures::{
    blind_deconvolve, decouple, estimate_gmm, DeconvolutionConfig, DeconvolutionError, DiscreteMixtureParams,
};
use overcomplete::probe::stream_rng;
use overcomplete::synth::{gen_components, sample_mixture, DeconvolutionStyle, NoiseSpec, Structure};
use overcomplete::tensor::ComponentMatrix;
use proptest::prelude::*;
use rand::Rng;

fn plane_instance() -> DiscreteMixtureParams<f64> {
    let means = ComponentMatrix::new(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![-1.0, -1.0, 0.0]]).unwrap();
    DiscreteMixtureParams::new(vec![1.0 / 3.0; 3], means).unwrap()
}

fn exact_inputs(p: &DiscreteMixtureParams<f64>) -> (ComponentMatrix<f64>, Vec<f64>) {
    let xi = p.weights().iter().zip(p.rho()).map(|(w, r)| w * r.powi(3)).collect();
    (p.scaled_components(), xi)
}

fn weight_error(truth: &DiscreteMixtureParams<f64>, est: &DiscreteMixtureParams<f64>) -> (f64, f64) {
    let m = match_components(truth.means(), est.means()).unwrap();
    let w = m
        .permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| (est.weights()[i] - truth.weights()[j]).abs())
        .fold(0.0, f64::max);
    (w, m.max_error)
}

#[test]
fn null_vector_identity_on_exact_instance() {
    let p = plane_instance();
    let (scaled, xi) = exact_inputs(&p);
    let dec = decouple(&scaled, &xi).unwrap();
    assert!(dec.singular_values[2] <= 1e-10);
    let av = scaled.to_matrix().matvec(&dec.null_vector);
    assert!(av.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-10);
    // v ∝ w^{2/3}
    let w23: Vec<f64> = p.weights().iter().map(|w| w.powf(2.0 / 3.0)).collect();
    let n = w23.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (v, t) in dec.null_vector.iter().zip(&w23) {
        assert!((v - t / n).abs() <= 1e-10);
    }
    let (we, me) = weight_error(&p, &dec.params);
    assert!(we <= 1e-10 && me <= 1e-10);
}

#[test]
fn decouple_is_stable_under_small_perturbation() {
    let style = DeconvolutionStyle::default();
    for seed in 0..10 {
        let p = gen_components::<f64>(4, 4, &Structure::Deconvolution(style.clone()), seed)
            .unwrap()
            .mixture()
            .unwrap();
        let (scaled, xi) = exact_inputs(&p);
        let mut rng = stream_rng(seed, 5);
        let cols = scaled
            .columns()
            .iter()
            .map(|c| c.iter().map(|x| x + 1e-8 * (2.0 * rng.gen::<f64>() - 1.0)).collect())
            .collect();
        let dec = decouple(&ComponentMatrix::new(4, cols).unwrap(), &xi).unwrap();
        let (we, _) = weight_error(&p, &dec.params);
        assert!(we <= 1e-6, "seed {seed}: {we}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn decoupled_weights_lie_on_simplex(seed in 0u64..10_000, d in 3usize..6) {
        let p = gen_components::<f64>(d, d, &Structure::Deconvolution(DeconvolutionStyle::default()), seed)
            .unwrap().mixture().unwrap();
        let (scaled, xi) = exact_inputs(&p);
        let dec = decouple(&scaled, &xi).unwrap();
        let w = dec.params.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn plane_instance_without_noise() {
    let p = plane_instance();
    let s = sample_mixture(&p, &NoiseSpec::None, 10_000, 1).unwrap();
    let mut cfg = DeconvolutionConfig::new(3, 1);
    cfg.epsilon = 2.0 * k3_standard_error(&s).unwrap();
    let (est, _) = blind_deconvolve(&s, &cfg).expect("deconvolution");
    let (we, me) = weight_error(&p, &est);
    assert!(we <= 0.02 && me <= 0.05, "weights {we}, means {me}");
}

#[test]
fn plane_instance_with_uniform_noise() {
    let p = plane_instance();
    let s = sample_mixture(&p, &NoiseSpec::UniformBox(vec![0.5; 3]), 500_000, 2).unwrap();
    let mut cfg = DeconvolutionConfig::new(3, 2);
    cfg.epsilon = 2.0 * k3_standard_error(&s).unwrap();
    let (est, _) = blind_deconvolve(&s, &cfg).expect("deconvolution");
    let (we, me) = weight_error(&p, &est);
    assert!(we <= 0.05 && me <= 0.1, "weights {we}, means {me}");
}

#[test]
fn identical_rows_fail_cleanly() {
    let s = SampleSet::new(3, vec![vec![0.5, -1.0, 2.0]; 100]).unwrap();
    let mut cfg = DeconvolutionConfig::new(3, 0);
    cfg.max_attempts = 50;
    assert!(matches!(
        blind_deconvolve(&s, &cfg),
        Err(DeconvolutionError::Decomposition(_))
    ));
}

#[test]
fn dimension_two_is_rejected() {
    let s = SampleSet::new(2, vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]]).unwrap();
    assert!(matches!(
        blind_deconvolve(&s, &DeconvolutionConfig::new(2, 0)),
        Err(DeconvolutionError::DimensionTooSmall(2))
    ));
}

fn five_dim_case(seed: u64, count: usize) -> (DiscreteMixtureParams<f64>, SampleSet<f64>, Matrix<f64>) {
    let p = gen_components::<f64>(
        5,
        5,
        &Structure::Deconvolution(DeconvolutionStyle::default()),
        100 + seed,
    )
    .unwrap()
    .mixture()
    .unwrap();
    let sigma = Matrix::from_diag(&[0.04, 0.09, 0.01, 0.02, 0.05]);
    let s = sample_mixture(&p, &NoiseSpec::Gaussian(sigma.clone()), count, 200 + seed).unwrap();
    (p, s, sigma)
}

#[test]
fn small_sample_gmm_reports_its_residual() {
    let (_, s, _) = five_dim_case(0, 50);
    let mut cfg = DeconvolutionConfig::new(5, 0);
    cfg.max_attempts = 200;
    match estimate_gmm(&s, &cfg) {
        Ok(est) => assert!(est.diagnostics.residual_frobenius <= cfg.epsilon),
        Err(DeconvolutionError::Decomposition(_)) | Err(DeconvolutionError::Decouple(_)) => {}
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn five_dim_gmm_end_to_end() {
    let (p, s, sigma) = five_dim_case(3, 500_000);
    let mut cfg = DeconvolutionConfig::new(5, 3);
    cfg.epsilon = 2.0 * k3_standard_error(&s).unwrap();
    cfg.max_attempts = 1_000_000;
    let est = estimate_gmm(&s, &cfg).unwrap();
    let (we, me) = weight_error(&p, &est.params.mixture);
    assert!(we <= 0.05 && me <= 0.1, "weights {we}, means {me}");
    let cov = &est.params.covariance;
    assert_eq!(cov.sub(&cov.transpose()).max_abs(), 0.0);
    // mean errors of a few 1e-2 enter Σ̃ through Σ w μμᵀ
    let cov_err = cov.sub(&sigma).frobenius_norm();
    assert!(
        cov_err <= 0.2 * sigma.frobenius_norm(),
        "covariance error {cov_err}, weights {we}, means {me}"
    );
    let psd_min = sym_eig(&est.covariance_psd)
        .unwrap()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    assert!(psd_min >= -1e-12);
    // centered-frame means average to about zero
    assert!(est.diagnostics.centered_mean_norm <= 10.0 * me * 5.0);
    // repeat is identical
    let again = estimate_gmm(&s, &cfg).unwrap();
    assert_eq!(est, again);
}
