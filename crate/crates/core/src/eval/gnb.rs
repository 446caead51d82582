use std::f64::consts::PI;

use super::{argmax, Classification};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Gaussian naive Bayes with class-frequency priors.
///
/// Per-class feature variances are population variances floored at
/// `1e-9 ·` the largest per-feature variance of the whole training set.
/// Scores are posteriors normalized in log space.
pub fn gnb_fit_predict(
    train: &Matrix,
    train_labels: &[usize],
    test: &Matrix,
    num_classes: usize,
) -> Result<Classification> {
    if train_labels.len() != train.rows() {
        return Err(Error::CountMismatch {
            images: train.rows(),
            labels: train_labels.len(),
        });
    }
    if train.cols() != test.cols() {
        return Err(Error::shape("gnb_fit_predict", train.shape(), test.shape()));
    }
    if let Some(&label) = train_labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidLabel { label, num_classes });
    }
    let n = train.cols();
    let mut counts = vec![0usize; num_classes];
    let mut mean = Matrix::zeros(num_classes, n);
    for (row, &c) in train.row_iter().zip(train_labels) {
        counts[c] += 1;
        mean.row_mut(c)
            .iter_mut()
            .zip(row)
            .for_each(|(m, x)| *m += x);
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass(c));
    }
    for (c, &count) in counts.iter().enumerate() {
        let inv = 1.0 / count as f64;
        mean.row_mut(c).iter_mut().for_each(|m| *m *= inv);
    }
    let mut var = Matrix::zeros(num_classes, n);
    for (row, &c) in train.row_iter().zip(train_labels) {
        let mu = mean.row(c).to_vec();
        var.row_mut(c)
            .iter_mut()
            .zip(row.iter().zip(&mu))
            .for_each(|(v, (x, m))| *v += (x - m) * (x - m));
    }
    for (c, &count) in counts.iter().enumerate() {
        let inv = 1.0 / count as f64;
        var.row_mut(c).iter_mut().for_each(|v| *v *= inv);
    }

    let floor = variance_floor(train);
    var.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = v.max(floor));
    let m = train.rows() as f64;
    let log_prior: Vec<f64> = counts.iter().map(|&c| (c as f64 / m).ln()).collect();
    let log_norm: Vec<f64> = (0..num_classes)
        .map(|c| -0.5 * var.row(c).iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>())
        .collect();

    let mut scores = Matrix::zeros(test.rows(), num_classes);
    let mut predicted = Vec::with_capacity(test.rows());
    for (i, x) in test.row_iter().enumerate() {
        let out = scores.row_mut(i);
        for c in 0..num_classes {
            let quad: f64 = x
                .iter()
                .zip(mean.row(c))
                .zip(var.row(c))
                .map(|((xi, mu), v)| (xi - mu) * (xi - mu) / v)
                .sum();
            out[c] = log_prior[c] + log_norm[c] - 0.5 * quad;
        }
        predicted.push(argmax(out));
        let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = out.iter().map(|l| (l - top).exp()).sum();
        out.iter_mut().for_each(|l| *l = (*l - top).exp() / z);
    }
    Ok(Classification { predicted, scores })
}

fn variance_floor(train: &Matrix) -> f64 {
    let m = train.rows() as f64;
    let max_var = (0..train.cols())
        .map(|j| {
            let mu = train.row_iter().map(|r| r[j]).sum::<f64>() / m;
            train.row_iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / m
        })
        .fold(0.0, f64::max);
    if max_var > 0.0 {
        1e-9 * max_var
    } else {
        1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_clusters() {
        let train = Matrix::from_rows(&[[0.0], [0.1], [0.2], [5.0], [5.1], [5.3]]).unwrap();
        let test = Matrix::from_rows(&[[-1.0], [0.15], [2.0], [4.0], [9.0]]).unwrap();
        let c = gnb_fit_predict(&train, &[0, 0, 0, 1, 1, 1], &test, 2).unwrap();
        assert_eq!(c.predicted, vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn identical_classes_give_uniform_scores() {
        let block = [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let rows: Vec<[f64; 2]> = block.iter().chain(&block).chain(&block).copied().collect();
        let train = Matrix::from_rows(&rows).unwrap();
        let labels = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let test = Matrix::from_rows(&[[0.3, 0.9], [2.0, -1.0]]).unwrap();
        let c = gnb_fit_predict(&train, &labels, &test, 3).unwrap();
        for v in c.scores.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_direct_density_evaluation() {
        let train = Matrix::from_rows(&[
            [0.1, 0.9],
            [0.2, 0.7],
            [0.15, 0.85],
            [0.6, 0.4],
            [0.7, 0.3],
            [0.9, 0.5],
            [0.65, 0.2],
            [0.4, 0.1],
            [0.3, 0.15],
        ])
        .unwrap();
        let labels = [0, 0, 0, 1, 1, 1, 1, 2, 2];
        let test = Matrix::from_rows(&[[0.2, 0.8], [0.5, 0.3], [0.35, 0.2]]).unwrap();
        let c = gnb_fit_predict(&train, &labels, &test, 3).unwrap();

        // oracle: multiply explicit normal densities and normalize
        for (i, x) in test.row_iter().enumerate() {
            let mut joint = [0.0; 3];
            for (cls, j) in joint.iter_mut().enumerate() {
                let members: Vec<&[f64]> = train
                    .row_iter()
                    .zip(labels)
                    .filter(|(_, l)| *l == cls)
                    .map(|(r, _)| r)
                    .collect();
                let cnt = members.len() as f64;
                let mut p = cnt / 9.0;
                for f in 0..2 {
                    let mu = members.iter().map(|r| r[f]).sum::<f64>() / cnt;
                    let var = members.iter().map(|r| (r[f] - mu).powi(2)).sum::<f64>() / cnt;
                    p *= (-(x[f] - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
                }
                *j = p;
            }
            let total: f64 = joint.iter().sum();
            for (cls, j) in joint.iter().enumerate() {
                assert!((c.scores.get(i, cls) - j / total).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn missing_class() {
        let train = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(
            gnb_fit_predict(&train, &[0, 2], &train, 3),
            Err(Error::MissingClass(1))
        ));
    }

    #[test]
    fn constant_feature_is_floored() {
        let train = Matrix::from_rows(&[[0.0, 1.0], [0.2, 1.0], [0.8, 1.0], [1.0, 1.0]]).unwrap();
        let c = gnb_fit_predict(&train, &[0, 0, 1, 1], &train, 2).unwrap();
        assert!(c.scores.is_finite());
        assert_eq!(c.predicted, vec![0, 0, 1, 1]);
    }
}
