//! Seeded random streams and uniform probes on the unit sphere.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{norm2, Real};

/// Independent stream for one attempt of a randomized search.
///
/// Streams depend only on `(seed, index)`, so attempts can be evaluated in any order
/// or concurrently and still see the same randomness.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform point on `𝕊^{d−1}`, drawn as a normalized standard Gaussian vector.
pub fn random_unit_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<T> {
    loop {
        let z: Vec<T> = (0..d).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
        let n = norm2(&z);
        if n > T::zero() && n.is_finite() {
            return z.into_iter().map(|v| v / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = random_unit_vector(&mut stream_rng(1, 0), 5);
        let b: Vec<f64> = random_unit_vector(&mut stream_rng(1, 0), 5);
        let c: Vec<f64> = random_unit_vector(&mut stream_rng(1, 1), 5);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((norm2(&a) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_mean_is_near_zero() {
        let mut rng = stream_rng(42, 0);
        let n = 20_000;
        let mut mean = [0.0f64; 3];
        for _ in 0..n {
            let v: Vec<f64> = random_unit_vector(&mut rng, 3);
            mean.iter_mut().zip(&v).for_each(|(m, x)| *m += x / n as f64);
        }
        // each coordinate has variance 1/3; 5 standard errors
        let bound = 5.0 * (1.0 / 3.0 / n as f64).sqrt();
        assert!(mean.iter().all(|m| m.abs() < bound), "{mean:?}");
    }
}
