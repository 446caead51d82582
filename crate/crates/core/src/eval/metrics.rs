use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Accuracy plus macro-averaged precision, recall, F1, Jaccard and
/// one-vs-rest ROC AUC.
///
/// Macro averages run over every class that occurs in the true or the
/// predicted labels. A class that is never predicted contributes precision
/// 0 and is listed in `undefined_precision`. ROC AUC skips classes with no
/// positive or no negative sample and averages the rest; it is NaN when no
/// class qualifies.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub jaccard: f64,
    pub roc_auc: f64,
    pub undefined_precision: Vec<usize>,
}

impl ClassificationReport {
    pub const METRICS: [&'static str; 6] = [
        "accuracy",
        "precision",
        "recall",
        "f1",
        "jaccard",
        "roc_auc",
    ];

    /// `(name, value)` pairs in [`Self::METRICS`] order.
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("jaccard", self.jaccard),
            ("roc_auc", self.roc_auc),
        ]
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_metrics(
    truth: &[usize],
    predicted: &[usize],
    scores: &Matrix,
) -> Result<ClassificationReport> {
    if truth.len() != predicted.len() || truth.len() != scores.rows() {
        return Err(Error::CountMismatch {
            images: predicted.len().max(scores.rows()),
            labels: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = scores.cols();
    if let Some(&label) = truth.iter().chain(predicted).find(|&&l| l >= p) {
        return Err(Error::InvalidLabel {
            label,
            num_classes: p,
        });
    }

    let mut counts = vec![Counts::default(); p];
    let mut present = vec![false; p];
    let mut correct = 0;
    for (&t, &y) in truth.iter().zip(predicted) {
        present[t] = true;
        present[y] = true;
        if t == y {
            counts[t].tp += 1;
            correct += 1;
        } else {
            counts[y].fp += 1;
            counts[t].fn_ += 1;
        }
    }

    let classes: Vec<usize> = (0..p).filter(|&c| present[c]).collect();
    let mut sums = [0.0; 4];
    let mut undefined_precision = Vec::new();
    for &c in &classes {
        let Counts { tp, fp, fn_ } = counts[c];
        if tp + fp == 0 {
            undefined_precision.push(c);
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let jaccard = ratio(tp, tp + fp + fn_);
        for (s, v) in sums.iter_mut().zip([precision, recall, f1, jaccard]) {
            *s += v;
        }
    }
    let nc = classes.len() as f64;

    let aucs: Vec<f64> = (0..p)
        .filter_map(|c| {
            let column: Vec<f64> = (0..scores.rows()).map(|i| scores.get(i, c)).collect();
            let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            binary_auc(&column, &positive)
        })
        .collect();
    let roc_auc = if aucs.is_empty() {
        f64::NAN
    } else {
        aucs.iter().sum::<f64>() / aucs.len() as f64
    };

    Ok(ClassificationReport {
        accuracy: correct as f64 / truth.len() as f64,
        precision: sums[0] / nc,
        recall: sums[1] / nc,
        f1: sums[2] / nc,
        jaccard: sums[3] / nc,
        roc_auc,
        undefined_precision,
    })
}

/// Mann-Whitney form of the ROC area with mid-ranks for tied scores.
fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum, so mid-ranks stay integral
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u64;
        for &idx in &order[i..=j] {
            if positive[idx] {
                rank_sum2 += mid2;
            }
        }
        i = j + 1;
    }
    let (np, nn) = (n_pos as u64, n_neg as u64);
    let u2 = rank_sum2 - np * (np + 1);
    Some(u2 as f64 / (2 * np * nn) as f64)
}
