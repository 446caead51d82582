//! Dataset ingestion and the positive/negative label-embedded training
//! matrices.

mod cifar;
mod encode;
mod idx;
mod synth;

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;

pub use cifar::{parse_cifar10_bin, CIFAR10_RECORD};
pub use encode::{
    build_training_matrix, build_training_matrix_with, embed_labels, EncodedMatrix, HalfMode,
    Polarity,
};
pub use idx::{parse_idx, parse_idx_with_offset, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use synth::synth_blobs;

use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Matrix};

/// Samples scaled to [0, 1] with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    samples: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(samples: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if samples.rows() != labels.len() {
            return Err(Error::CountMismatch {
                images: samples.rows(),
                labels: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidLabel { label, num_classes });
        }
        if samples.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("sample values must lie in [0, 1]".into()));
        }
        Ok(LabeledDataset {
            samples,
            labels,
            num_classes,
        })
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.samples.cols()
    }

    /// Widens the class count, e.g. when a subset lacks the top classes.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if let Some(&label) = self.labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidLabel { label, num_classes });
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            samples: self.samples.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// First `n` samples (or all of them when fewer).
    pub fn take(&self, n: usize) -> LabeledDataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }

    pub fn shuffled(&self, seed: u64) -> LabeledDataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut seeded_rng(seed));
        self.select(&idx)
    }

    /// Concatenates datasets with equal feature counts (CIFAR-10 batches).
    pub fn concat(parts: Vec<LabeledDataset>) -> Result<LabeledDataset> {
        let cols = parts.first().map_or(0, |p| p.num_features());
        let num_classes = parts.iter().map(|p| p.num_classes).max().unwrap_or(0);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.num_features() != cols && !p.is_empty() {
                return Err(Error::shape("concat", (0, cols), p.samples.shape()));
            }
            labels.extend_from_slice(&p.labels);
            data.extend(p.samples.into_vec());
        }
        let samples = Matrix::new(labels.len(), cols, data)?;
        Ok(LabeledDataset {
            samples,
            labels,
            num_classes,
        })
    }
}

/// Reads a whole file, transparently inflating gzip (`1f 8b`) content.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx(images: &Path, labels: &Path, label_offset: usize) -> Result<LabeledDataset> {
    parse_idx_with_offset(&read_bytes(images)?, &read_bytes(labels)?, label_offset)
}

pub fn load_cifar10(batches: &[impl AsRef<Path>]) -> Result<LabeledDataset> {
    let parts = batches
        .iter()
        .map(|p| parse_cifar10_bin(&read_bytes(p.as_ref())?))
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::concat(parts)
}
