use overcomplete::cumulants::{center, k3_fast, k3_naive, sample_mean, second_moment, SampleSet};
use overcomplete::probe::stream_rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_set(n: usize, d: usize, seed: u64) -> SampleSet<f64> {
    let mut rng = stream_rng(seed, 7);
    SampleSet::new(
        d,
        (0..n)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect(),
    )
    .unwrap()
}

#[test]
fn mean_and_second_moment_match_summation_oracle() {
    let s = gaussian_set(5000, 3, 1);
    let mean = sample_mean(&s).unwrap();
    let mut m2 = [[0.0; 3]; 3];
    let mut m1 = [0.0; 3];
    for r in s.rows() {
        for i in 0..3 {
            m1[i] += r[i];
            for j in 0..3 {
                m2[i][j] += r[i] * r[j];
            }
        }
    }
    let sm = second_moment(&s).unwrap();
    for i in 0..3 {
        assert!((mean[i] - m1[i] / 5000.0).abs() < 1e-12);
        for j in 0..3 {
            assert!((sm[(i, j)] - m2[i][j] / 5000.0).abs() < 1e-12);
        }
    }
}

#[test]
fn centered_mean_vanishes() {
    let s = gaussian_set(10_000, 4, 2);
    let shifted = SampleSet::new(4, s.rows().map(|r| r.iter().map(|x| x + 3.0).collect()).collect()).unwrap();
    let c = center(&shifted).unwrap();
    assert!(sample_mean(&c).unwrap().iter().all(|m| m.abs() < 1e-12));
}

#[test]
fn k3_is_translation_invariant_and_exactly_symmetric() {
    let s = gaussian_set(200, 3, 3);
    let shifted = SampleSet::new(3, s.rows().map(|r| r.iter().map(|x| x - 5.0).collect()).collect()).unwrap();
    let a = k3_fast(&s).unwrap();
    let b = k3_fast(&shifted).unwrap();
    assert!(a.frobenius_distance(&b).unwrap() < 1e-10);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(a.get(i, j, k), a.get(k, i, j));
                assert_eq!(a.get(i, j, k), a.get(j, i, k));
            }
        }
    }
}

#[test]
fn k3_variance_shrinks_with_sample_size() {
    let trials = 500;
    let entry_var = |n: usize, base: u64| {
        let vals: Vec<f64> = (0..trials)
            .map(|t| k3_fast(&gaussian_set(n, 2, base + t)).unwrap().get(0, 0, 1))
            .collect();
        let m = vals.iter().sum::<f64>() / trials as f64;
        vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (trials - 1) as f64
    };
    let v100 = entry_var(100, 10_000);
    let v400 = entry_var(400, 20_000);
    assert!(v400 < v100, "{v400} vs {v100}");
}

#[test]
fn chunked_accumulation_matches_two_pass() {
    // more rows than one accumulation chunk
    let s = gaussian_set(20_000, 3, 4);
    let fast = k3_fast(&s).unwrap();
    let c = center(&s).unwrap();
    let n = s.count() as f64;
    for (i, j, k) in [(0, 0, 0), (0, 1, 2), (1, 1, 2)] {
        let sum: f64 = c.rows().map(|r| r[i] * r[j] * r[k]).sum();
        let want = n / ((n - 1.0) * (n - 2.0)) * sum;
        assert!((fast.get(i, j, k) - want).abs() < 1e-10);
    }
}

fn sample_sets() -> impl Strategy<Value = SampleSet<f64>> {
    (3usize..12, 1usize..4).prop_flat_map(|(n, d)| {
        proptest::collection::vec(-3.0f64..3.0, n * d).prop_map(move |data| SampleSet::from_row_major(d, data).unwrap())
    })
}

proptest! {
    #[test]
    fn fast_agrees_with_naive(s in sample_sets()) {
        let fast = k3_fast(&s).unwrap();
        let naive = k3_naive(&s).unwrap();
        let diff = fast.frobenius_distance(&naive).unwrap();
        prop_assert!(diff <= 1e-10 * (1.0 + naive.frobenius_norm()), "{}", diff);
    }
}
