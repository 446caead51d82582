use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Matrix};

/// Gaussian clusters in the unit cube, one per class. Sample `i` belongs to
/// class `i % num_classes`, so any prefix of the dataset is class-balanced.
/// Cluster centres are uniform in [0.1, 0.9]; values are clipped to [0, 1].
pub fn synth_blobs(
    num_classes: usize,
    per_class: usize,
    n: usize,
    spread: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n < num_classes {
        return Err(Error::Config(format!(
            "{num_classes} classes need at least as many features, got {n}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let centres = Matrix::from_fn(num_classes, n, |_, _| rng.random_range(0.1..0.9));
    let noise = (spread > 0.0).then(|| Normal::new(0.0, spread).expect("positive spread"));
    let m = num_classes * per_class;
    let labels: Vec<usize> = (0..m).map(|i| i % num_classes.max(1)).collect();
    let samples = Matrix::from_fn(m, n, |i, j| {
        let c = centres.get(labels[i], j);
        let v = match &noise {
            Some(d) => c + d.sample(&mut rng),
            None => c,
        };
        v.clamp(0.0, 1.0)
    });
    LabeledDataset::new(samples, labels, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_collapses_clusters() {
        let ds = synth_blobs(3, 4, 6, 0.0, 1).unwrap();
        for i in 3..ds.len() {
            assert_eq!(ds.samples().row(i), ds.samples().row(i - 3));
        }
    }

    #[test]
    fn labels_balanced() {
        let ds = synth_blobs(4, 5, 8, 0.3, 2).unwrap();
        for c in 0..4 {
            assert_eq!(ds.labels().iter().filter(|&&l| l == c).count(), 5);
        }
    }

    #[test]
    fn seeds_change_samples_not_labels() {
        let a = synth_blobs(4, 5, 8, 0.3, 2).unwrap();
        let b = synth_blobs(4, 5, 8, 0.3, 3).unwrap();
        assert_ne!(a.samples(), b.samples());
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a, synth_blobs(4, 5, 8, 0.3, 2).unwrap());
    }

    #[test]
    fn too_few_features() {
        assert!(synth_blobs(5, 2, 4, 0.1, 0).is_err());
    }
}
