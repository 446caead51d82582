use std::cmp::Ordering;

use super::{argmax, sq_dist, Classification};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::par::Exec;

/// Majority vote among the `k` nearest training points (Euclidean, ties by
/// lower training index). Scores are vote fractions; vote ties go to the
/// lower class index. `k` larger than the training set uses all of it.
pub fn knn_classify(
    train: &Matrix,
    train_labels: &[usize],
    test: &Matrix,
    k: usize,
    num_classes: usize,
) -> Result<Classification> {
    knn_classify_with(train, train_labels, test, k, num_classes, Exec::default())
}

pub fn knn_classify_with(
    train: &Matrix,
    train_labels: &[usize],
    test: &Matrix,
    k: usize,
    num_classes: usize,
    exec: Exec,
) -> Result<Classification> {
    if train.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if train_labels.len() != train.rows() {
        return Err(Error::CountMismatch {
            images: train.rows(),
            labels: train_labels.len(),
        });
    }
    if train.cols() != test.cols() {
        return Err(Error::shape("knn_classify", train.shape(), test.shape()));
    }
    if k == 0 {
        return Err(Error::Config("KNN needs k >= 1".into()));
    }
    if let Some(&label) = train_labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidLabel { label, num_classes });
    }
    let k = k.min(train.rows());
    let rows = exec.map_range(test.rows(), |i| {
        let q = test.row(i);
        let d: Vec<f64> = train.row_iter().map(|t| sq_dist(q, t)).collect();
        let mut idx: Vec<usize> = (0..train.rows()).collect();
        let cmp = |a: &usize, b: &usize| -> Ordering { d[*a].total_cmp(&d[*b]).then(a.cmp(b)) };
        if k < idx.len() {
            idx.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0.0; num_classes];
        for &j in &idx[..k] {
            votes[train_labels[j]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= k as f64);
        votes
    });
    let predicted = rows.iter().map(|r| argmax(r)).collect();
    let scores = Matrix::new(test.rows(), num_classes, rows.concat())?;
    Ok(Classification { predicted, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::randn_matrix;
    use rand::Rng;

    #[test]
    fn single_training_point() {
        let train = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        let test = randn_matrix(6, 2, 0.0, 1.0, 1);
        let c = knn_classify(&train, &[2], &test, 3, 3).unwrap();
        assert!(c.predicted.iter().all(|&p| p == 2));
        assert!(c.scores.row_iter().all(|r| r == [0.0, 0.0, 1.0]));
    }

    #[test]
    fn exact_match_with_k1() {
        let train = randn_matrix(10, 3, 0.0, 1.0, 2);
        let labels: Vec<usize> = (0..10).map(|i| i % 4).collect();
        let test = train.select_rows(&[7, 2]);
        let c = knn_classify(&train, &labels, &test, 1, 4).unwrap();
        assert_eq!(c.predicted, vec![3, 2]);
    }

    #[test]
    fn k_equal_m_gives_majority() {
        let train = randn_matrix(9, 2, 0.0, 1.0, 3);
        let labels = vec![1, 0, 1, 2, 1, 0, 2, 1, 0];
        let test = randn_matrix(5, 2, 0.0, 5.0, 4);
        let c = knn_classify(&train, &labels, &test, 9, 3).unwrap();
        assert!(c.predicted.iter().all(|&p| p == 1));
    }

    #[test]
    fn vote_tie_goes_to_lower_class() {
        let train = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let test = Matrix::from_rows(&[[1.0]]).unwrap();
        let c = knn_classify(&train, &[3, 1], &test, 2, 4).unwrap();
        assert_eq!(c.predicted, vec![1]);
        // equidistant neighbours with k = 1: the lower training index wins
        let c = knn_classify(&train, &[3, 1], &test, 1, 4).unwrap();
        assert_eq!(c.predicted, vec![3]);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = crate::numerics::seeded_rng(8);
        let train = randn_matrix(30, 4, 0.0, 1.0, 5);
        let labels: Vec<usize> = (0..30).map(|_| rng.random_range(0..3)).collect();
        let test = randn_matrix(12, 4, 0.0, 1.0, 6);
        let k = 5;
        let c = knn_classify(&train, &labels, &test, k, 3).unwrap();
        let seq = knn_classify_with(&train, &labels, &test, k, 3, Exec::Sequential).unwrap();
        assert_eq!(c, seq);
        for i in 0..test.rows() {
            let mut all: Vec<(f64, usize)> = (0..30)
                .map(|j| {
                    let d: f64 = (0..4)
                        .map(|f| (test.get(i, f) - train.get(j, f)).powi(2))
                        .sum();
                    (d.sqrt(), j)
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut votes = [0usize; 3];
            for &(_, j) in &all[..k] {
                votes[labels[j]] += 1;
            }
            let best = (0..3)
                .max_by_key(|&c| (votes[c], std::cmp::Reverse(c)))
                .unwrap();
            assert_eq!(c.predicted[i], best);
            for (cls, &v) in votes.iter().enumerate() {
                assert_eq!(c.scores.get(i, cls), v as f64 / k as f64);
            }
        }
    }

    #[test]
    fn errors() {
        let t = Matrix::zeros(0, 2);
        assert!(knn_classify(&t, &[], &Matrix::zeros(1, 2), 1, 2).is_err());
        let t = Matrix::zeros(2, 2);
        assert!(knn_classify(&t, &[0, 1], &Matrix::zeros(1, 3), 1, 2).is_err());
        assert!(knn_classify(&t, &[0, 1], &Matrix::zeros(1, 2), 0, 2).is_err());
    }
}
