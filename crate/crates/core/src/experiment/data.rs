use std::path::{Path, PathBuf};

use super::config::{DataConfig, DataFormat};
use crate::dataset::{load_cifar10, load_idx, synth_blobs, LabeledDataset};
use crate::error::{Error, Result};

/// Training and held-out samples sharing one label space.
#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

impl Splits {
    pub fn num_features(&self) -> usize {
        self.train.num_features()
    }

    pub fn num_classes(&self) -> usize {
        self.train.num_classes()
    }
}

/// Finds `stem` or `stem.gz` inside `dir`.
fn locate(dir: &Path, stems: &[&str]) -> Result<PathBuf> {
    for stem in stems {
        for name in [stem.to_string(), format!("{stem}.gz")] {
            let p = dir.join(name);
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(Error::io(
        dir.join(stems[0]),
        std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
    ))
}

fn load_raw(cfg: &DataConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    match cfg.format {
        DataFormat::Idx => {
            let dir = cfg
                .path
                .as_deref()
                .ok_or_else(|| Error::Config("idx needs a path".into()))?;
            let train = load_idx(
                &locate(dir, &["train-images-idx3-ubyte", "train-images.idx3-ubyte"])?,
                &locate(dir, &["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"])?,
                cfg.label_offset,
            )?;
            let test = load_idx(
                &locate(dir, &["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"])?,
                &locate(dir, &["t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"])?,
                cfg.label_offset,
            )?;
            Ok((train, test))
        }
        DataFormat::Cifar10 => {
            let dir = cfg
                .path
                .as_deref()
                .ok_or_else(|| Error::Config("cifar10 needs a path".into()))?;
            let batches: Vec<PathBuf> = (1..=5)
                .filter_map(|i| locate(dir, &[&format!("data_batch_{i}.bin")]).ok())
                .collect();
            if batches.is_empty() {
                locate(dir, &["data_batch_1.bin"])?;
            }
            let train = load_cifar10(&batches)?;
            let test = load_cifar10(&[locate(dir, &["test_batch.bin"])?])?;
            Ok((train, test))
        }
        DataFormat::Synth => {
            let s = &cfg.synth;
            let all = synth_blobs(
                s.classes,
                s.per_class + s.test_per_class,
                s.features,
                s.spread,
                s.seed,
            )?;
            let cut = s.classes * s.per_class;
            let train = all.select(&(0..cut).collect::<Vec<_>>());
            let test = all.select(&(cut..all.len()).collect::<Vec<_>>());
            Ok((train, test))
        }
    }
}

/// Loads both splits, truncates them to `max_train` / `max_test` and
/// widens them to a common number of classes.
pub fn load_splits(cfg: &DataConfig) -> Result<Splits> {
    let (mut train, mut test) = load_raw(cfg)?;
    if let Some(n) = cfg.max_train {
        train = train.take(n);
    }
    if let Some(n) = cfg.max_test {
        test = test.take(n);
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.num_features() != test.num_features() && !test.is_empty() {
        return Err(Error::shape(
            "load_splits",
            (train.len(), train.num_features()),
            (test.len(), test.num_features()),
        ));
    }
    let p = cfg
        .num_classes
        .unwrap_or(0)
        .max(train.num_classes())
        .max(test.num_classes());
    Ok(Splits {
        train: train.with_num_classes(p)?,
        test: test.with_num_classes(p)?,
    })
}
