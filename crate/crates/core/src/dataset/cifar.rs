use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One label byte then 1024 red, 1024 green and 1024 blue pixel bytes.
pub const CIFAR10_RECORD: usize = 1 + 3072;
const CIFAR10_CLASSES: usize = 10;

pub fn parse_cifar10_bin(batch_bytes: &[u8]) -> Result<LabeledDataset> {
    if !batch_bytes.len().is_multiple_of(CIFAR10_RECORD) {
        return Err(Error::RecordLength(batch_bytes.len()));
    }
    let count = batch_bytes.len() / CIFAR10_RECORD;
    let mut labels = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * (CIFAR10_RECORD - 1));
    for record in batch_bytes.chunks_exact(CIFAR10_RECORD) {
        let label = record[0] as usize;
        if label >= CIFAR10_CLASSES {
            return Err(Error::InvalidLabel {
                label,
                num_classes: CIFAR10_CLASSES,
            });
        }
        labels.push(label);
        data.extend(record[1..].iter().map(|&b| f64::from(b) / 255.0));
    }
    let samples = Matrix::new(count, CIFAR10_RECORD - 1, data)?;
    LabeledDataset::new(samples, labels, CIFAR10_CLASSES)
}
