//! Embedding quality and downstream classification.

mod gnb;
mod knn;
mod metrics;
mod trust;

pub use gnb::gnb_fit_predict;
pub use knn::{knn_classify, knn_classify_with};
pub use metrics::{classification_metrics, ClassificationReport};
pub use trust::{subsample_indices, trustworthiness, trustworthiness_with, NeighborRanks};

use crate::numerics::Matrix;

/// Predicted labels and a row-stochastic `m x p` score matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub predicted: Vec<usize>,
    pub scores: Matrix,
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lowest index among the maxima.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}
