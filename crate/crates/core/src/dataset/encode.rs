use rand::Rng as _;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Samples whose first `num_classes` features carry a one-hot label: the
/// true one for positive rows, a wrong one for negative rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedMatrix {
    pub data: Matrix,
    pub polarity: Vec<Polarity>,
    /// True labels, kept for downstream classification.
    pub source_labels: Vec<usize>,
    pub num_classes: usize,
}

impl EncodedMatrix {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    /// Row indices of the positive samples, in order.
    pub fn positive_rows(&self) -> Vec<usize> {
        self.polarity
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == Polarity::Positive)
            .map(|(i, _)| i)
            .collect()
    }

    /// The hot index of row `i`.
    pub fn embedded_label(&self, i: usize) -> Option<usize> {
        self.data.row(i)[..self.num_classes]
            .iter()
            .position(|&v| v == 1.0)
    }
}

/// How the positive and negative halves of a training matrix pick their
/// images.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HalfMode {
    /// First ceil(m/2) samples positive, the remaining ones negative.
    #[default]
    Disjoint,
    /// Both halves re-use the leading samples, so each negative is a
    /// re-labelled copy of a positive.
    Mirrored,
}

/// Overwrites features `0..p` of every sample with a one-hot label.
/// Negative labels are drawn uniformly from the other `p - 1` classes using
/// a generator seeded by `seed`; positive encoding ignores the seed.
pub fn embed_labels(ds: &LabeledDataset, polarity: Polarity, seed: u64) -> Result<EncodedMatrix> {
    let rows: Vec<usize> = (0..ds.len()).collect();
    let pol = vec![polarity; ds.len()];
    encode_rows(ds, &rows, &pol, seed)
}

pub fn build_training_matrix(ds: &LabeledDataset, seed: u64) -> Result<EncodedMatrix> {
    build_training_matrix_with(ds, seed, HalfMode::Disjoint)
}

pub fn build_training_matrix_with(
    ds: &LabeledDataset,
    seed: u64,
    mode: HalfMode,
) -> Result<EncodedMatrix> {
    let m = ds.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let positives = m.div_ceil(2);
    let negatives = m - positives;
    let negative_source = match mode {
        HalfMode::Disjoint => positives..m,
        HalfMode::Mirrored => 0..negatives,
    };
    let rows: Vec<usize> = (0..positives).chain(negative_source).collect();
    let pol: Vec<Polarity> = std::iter::repeat_n(Polarity::Positive, positives)
        .chain(std::iter::repeat_n(Polarity::Negative, negatives))
        .collect();
    encode_rows(ds, &rows, &pol, seed)
}

fn encode_rows(
    ds: &LabeledDataset,
    rows: &[usize],
    polarity: &[Polarity],
    seed: u64,
) -> Result<EncodedMatrix> {
    let p = ds.num_classes();
    let n = ds.num_features();
    if p > n {
        return Err(Error::Config(format!(
            "{p} classes do not fit in {n} features"
        )));
    }
    if p < 2 && polarity.contains(&Polarity::Negative) {
        return Err(Error::Config(
            "negative encoding needs at least two classes".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut data = ds.samples().select_rows(rows);
    let source_labels: Vec<usize> = rows.iter().map(|&i| ds.labels()[i]).collect();
    for (i, (&label, &pol)) in source_labels.iter().zip(polarity).enumerate() {
        let hot = match pol {
            Polarity::Positive => label,
            Polarity::Negative => {
                let u = rng.random_range(0..p - 1);
                if u >= label {
                    u + 1
                } else {
                    u
                }
            }
        };
        let row = data.row_mut(i);
        row[..p].fill(0.0);
        row[hot] = 1.0;
    }
    Ok(EncodedMatrix {
        data,
        polarity: polarity.to_vec(),
        source_labels,
        num_classes: p,
    })
}
