use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Matrix;

/// The crate-wide deterministic generator.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of Normal(mean, std) draws filled row-major from a ChaCha8 stream
/// seeded with `seed`. Deviates come from `rand_distr`'s ziggurat sampler.
/// `std = 0` yields a constant matrix; a negative or non-finite `std` is
/// treated as 0.
/// Independent sub-seed for stream `stream` of a run seeded with `seed`
/// (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn randn_matrix(rows: usize, cols: usize, mean: f64, std: f64, seed: u64) -> Matrix {
    let mut rng = seeded_rng(seed);
    fill_normal(rows, cols, mean, std, &mut rng)
}

pub(crate) fn fill_normal(rows: usize, cols: usize, mean: f64, std: f64, rng: &mut Rng) -> Matrix {
    if !(std > 0.0 && std.is_finite()) {
        return Matrix::filled(rows, cols, mean);
    }
    let dist = Normal::new(mean, std).expect("std checked positive and finite");
    Matrix::from_fn(rows, cols, |_, _| dist.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_is_constant() {
        let m = randn_matrix(3, 4, 0.7, 0.0, 9);
        assert!(m.as_slice().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn same_seed_same_bits() {
        let a = randn_matrix(5, 6, 0.0, 0.1, 42);
        let b = randn_matrix(5, 6, 0.0, 0.1, 42);
        let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a, randn_matrix(5, 6, 0.0, 0.1, 43));
    }

    #[test]
    fn sample_moments() {
        let m = randn_matrix(100, 100, 0.0, 0.1, 2024);
        let n = m.as_slice().len() as f64;
        let mean = m.sum() / n;
        let var = m.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.005, "mean {mean}");
        assert!((0.095..=0.105).contains(&var.sqrt()), "std {}", var.sqrt());
    }
}
