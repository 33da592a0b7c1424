use overcomplete::eval::match_components;
use overcomplete::jennrich::{diagonalize, JennrichConfig, JennrichError};
use overcomplete::linalg::{svd, Matrix};
use overcomplete::overcomplete::{decompose, estimate_scales, DecompositionConfig, DecompositionError};
use overcomplete::probe::{random_unit_vector, stream_rng};
use overcomplete::synth::{gen_components, perturb_tensor, Structure};
use overcomplete::tensor::{ComponentMatrix, SymTensor3};
use rand::Rng;

fn pencil(a: &ComponentMatrix<f64>, weights: &[f64]) -> Matrix<f64> {
    let m = a.to_matrix();
    m.matmul(&Matrix::from_diag(weights)).matmul(&m.transpose())
}

fn sign_invariant_error(truth: &ComponentMatrix<f64>, est: &ComponentMatrix<f64>) -> f64 {
    let flipped: Vec<Vec<f64>> = est
        .columns()
        .iter()
        .map(|c| {
            let best = truth
                .columns()
                .iter()
                .map(|t| t.iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
                .fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc });
            c.iter().map(|x| x * best.signum()).collect()
        })
        .collect();
    match_components(truth, &ComponentMatrix::new(truth.dim(), flipped).unwrap())
        .unwrap()
        .max_error
}

#[test]
fn jennrich_recovers_exact_directions() {
    let mut rng = stream_rng(2024, 0);
    for seed in 0..30u64 {
        let d = 7;
        let r = rng.gen_range(2..=d);
        let a = gen_components::<f64>(d, r, &Structure::RandomUnit, seed)
            .unwrap()
            .components;
        let mu: Vec<f64> = (0..r).map(|i| 1.0 + i as f64).collect();
        let lambda: Vec<f64> = (0..r).map(|i| 2.0 + 0.5 * ((i * 7) % r) as f64).collect();
        let out = diagonalize(&pencil(&a, &mu), &pencil(&a, &lambda), &JennrichConfig::new(r)).unwrap();
        assert!(sign_invariant_error(&a, &out) < 1e-6, "seed {seed}");
    }
}

#[test]
fn jennrich_reports_repeated_ratios() {
    let a = gen_components::<f64>(4, 3, &Structure::RandomUnit, 1)
        .unwrap()
        .components;
    let m = pencil(&a, &[1.0, 2.0, 3.0]);
    assert!(matches!(
        diagonalize(&m, &m, &JennrichConfig::new(3)),
        Err(JennrichError::RepeatedSpectrum { .. })
    ));
}

#[test]
fn undercomplete_noiseless_recovery() {
    for seed in 0..10 {
        let a = gen_components::<f64>(5, 4, &Structure::RandomUnit, seed)
            .unwrap()
            .components;
        let scales = [1.0, 0.8, 1.3, 0.6];
        let scaled = a.scale_columns(&scales).unwrap();
        let t = SymTensor3::from_components(&scaled, None).unwrap();
        let cfg = DecompositionConfig::new(1e-8, 4, 0, 2.0, seed);
        let r = decompose(&t, &cfg).unwrap();
        assert!(r.residual_frobenius <= 1e-8);
        assert!(match_components(&scaled, &r.components).unwrap().max_error < 1e-6);
        // components rebuild the accepted tensor
        let rebuilt = SymTensor3::from_components(&r.components, None).unwrap();
        assert!((rebuilt.frobenius_distance(&t).unwrap() - r.residual_frobenius).abs() < 1e-10);
    }
}

#[test]
fn decomposition_is_thread_independent() {
    let a = gen_components::<f64>(5, 6, &Structure::NegativeSum, 3)
        .unwrap()
        .components;
    let t = perturb_tensor(&SymTensor3::from_components(&a, None).unwrap(), 1e-4, 9);
    let mut cfg = DecompositionConfig::new(0.2, 6, 1, 1.0, 17);
    cfg.max_attempts = 500;
    let run = |threads| {
        let mut c = cfg.clone();
        c.threads = threads;
        decompose(&t, &c)
    };
    let one = run(1);
    let four = run(4);
    match (one, four) {
        (Ok(x), Ok(y)) => assert_eq!(x, y),
        (Err(DecompositionError::AttemptsExhausted(x)), Err(DecompositionError::AttemptsExhausted(y))) => {
            assert_eq!(x.best, y.best)
        }
        other => panic!("runs disagree: {other:?}"),
    }
}

#[test]
fn scales_from_exact_directions() {
    for seed in 0..10 {
        let a = gen_components::<f64>(6, 5, &Structure::RandomUnit, 40 + seed)
            .unwrap()
            .components;
        let xi = [0.5, -1.2, 2.0, 0.9, 1.7];
        let t = SymTensor3::from_components(&a, Some(&xi)).unwrap();
        let x: Vec<f64> = random_unit_vector(&mut stream_rng(seed, 3), 6);
        let got = estimate_scales(&t, &x, &a).unwrap();
        for (g, w) in got.iter().zip(&xi) {
            assert!((g - w).abs() < 1e-9, "{got:?}");
        }
    }
}

#[test]
fn single_precision_decomposition() {
    let a = gen_components::<f64>(4, 3, &Structure::RandomUnit, 5)
        .unwrap()
        .components;
    let t: SymTensor3<f32> = SymTensor3::from_components(&a, None).unwrap().cast();
    let cfg = DecompositionConfig::<f32>::new(1e-3, 3, 0, 1.0, 0);
    let r = decompose(&t, &cfg).unwrap();
    assert!(match_components(&a.cast::<f32>(), &r.components).unwrap().max_error < 1e-3);
}

#[test]
fn overcomplete_components_recovered_from_good_probes() {
    // with probes exactly orthogonal to the surplus component the first phase is exact
    let a = gen_components::<f64>(6, 7, &Structure::NegativeSum, 8)
        .unwrap()
        .components;
    let t = SymTensor3::from_components(&a, None).unwrap();
    let surplus = a.column(6).to_vec();
    let mut rng = stream_rng(1, 1);
    let mut probe = || {
        let v: Vec<f64> = random_unit_vector(&mut rng, 6);
        let p: f64 = v.iter().zip(&surplus).map(|(x, y)| x * y).sum();
        let w: Vec<f64> = v.iter().zip(&surplus).map(|(x, s)| x - p * s).collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let (x, y) = (probe(), probe());
    let leading = diagonalize(
        &t.contract(&x).unwrap(),
        &t.contract(&y).unwrap(),
        &JennrichConfig::new(6),
    )
    .unwrap();
    let xi = estimate_scales(&t, &x, &leading).unwrap();
    let first = leading
        .scale_columns(&xi.iter().map(|v| v.cbrt()).collect::<Vec<_>>())
        .unwrap();
    let err = match_components(&a.select(&[0, 1, 2, 3, 4, 5]), &first)
        .unwrap()
        .max_error;
    assert!(err < 1e-8, "{err}");
    let rest = t.deflate(&leading, &xi).unwrap();
    let expected = SymTensor3::from_components(&a.select(&[6]), None).unwrap();
    assert!(rest.frobenius_distance(&expected).unwrap() < 1e-8);
}

#[test]
fn svd_condition_of_generated_sets() {
    let a = gen_components::<f64>(4, 4, &Structure::RandomUnit, 4)
        .unwrap()
        .components;
    assert!(svd(&a.to_matrix()).unwrap().singular_values[3] > 0.0);
}
