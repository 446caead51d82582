//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key accepted by [`ExperimentConfig::set`] is listed
//! in [`KEYS`]; [`ExperimentConfig::to_kv_string`] writes all of them back in
//! that order, which is also the text that gets hashed for provenance.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dataset::HalfMode;
use crate::error::{Error, Result};
use crate::ff::{FFLayerConfig, FFOptimizer};
use crate::meud::Variant;
use crate::train::TrainConfig;

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset.format", "idx | cifar10 | synth"),
    (
        "dataset.path",
        "directory holding the dataset files (idx, cifar10)",
    ),
    (
        "dataset.name",
        "value written to the dataset column of metric CSVs",
    ),
    ("dataset.label_offset", "subtracted from every IDX label"),
    (
        "dataset.num_classes",
        "label block width; defaults to the largest label + 1",
    ),
    (
        "dataset.max_train",
        "keep only the first N training samples",
    ),
    ("dataset.max_test", "keep only the first N test samples"),
    ("synth.classes", "number of synthetic clusters"),
    ("synth.per_class", "training samples per cluster"),
    ("synth.test_per_class", "test samples per cluster"),
    ("synth.features", "feature count n"),
    ("synth.spread", "cluster standard deviation"),
    ("synth.seed", "generator seed"),
    (
        "variants",
        "list of BaselineAE, MEUD, MEUD_FF, MEUD_Coop, MEUD_FF_Coop",
    ),
    ("r", "list of target dimensions"),
    (
        "depth",
        "hidden layers s of the encoder path, latent included",
    ),
    ("ring", "close the cooperation band into a ring"),
    (
        "half_mode",
        "disjoint | mirrored: image source of the negative half",
    ),
    ("seeds", "list of run seeds"),
    ("ff.theta", "goodness threshold"),
    ("ff.epochs", "epochs per shallow model"),
    ("ff.learning_rate", "shallow model learning rate"),
    ("ff.batch_size", "shallow model batch size"),
    ("ff.optimizer", "adam | sgd"),
    (
        "ff.normalize_between",
        "length-normalise hidden vectors between shallow models",
    ),
    (
        "ff.layers",
        "number of leading encoder connections to pretrain; 0 means all",
    ),
    ("train.epochs", "reconstruction training epochs"),
    ("train.batch_size", "mini-batch size"),
    ("train.learning_rate", "ADAM step size"),
    ("train.shuffle", "reshuffle rows every epoch"),
    ("eval.knn_k", "neighbours used by the KNN classifier"),
    ("eval.trust_k", "neighbourhood size of trustworthiness"),
    (
        "eval.trust_cap",
        "row cap for trustworthiness; 0 disables subsampling",
    ),
    (
        "eval.all_rows",
        "evaluate on all training rows instead of the positive half",
    ),
    (
        "eval.neutral_test_embedding",
        "zero the label block of test samples",
    ),
    ("out_dir", "output directory"),
    ("jobs", "parallel sweep cells"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Idx,
    Cifar10,
    Synth,
}

impl DataFormat {
    pub fn name(self) -> &'static str {
        match self {
            DataFormat::Idx => "idx",
            DataFormat::Cifar10 => "cifar10",
            DataFormat::Synth => "synth",
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idx" | "mnist" => Ok(DataFormat::Idx),
            "cifar10" | "cifar-10" | "cifar" => Ok(DataFormat::Cifar10),
            "synth" | "synthetic" => Ok(DataFormat::Synth),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub test_per_class: usize,
    pub features: usize,
    pub spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 4,
            per_class: 40,
            test_per_class: 10,
            features: 600,
            spread: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataConfig {
    pub format: DataFormat,
    pub path: Option<PathBuf>,
    pub name: Option<String>,
    pub label_offset: usize,
    pub num_classes: Option<usize>,
    pub max_train: Option<usize>,
    pub max_test: Option<usize>,
    pub synth: SynthConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            format: DataFormat::Synth,
            path: None,
            name: None,
            label_offset: 0,
            num_classes: None,
            max_train: None,
            max_test: None,
            synth: SynthConfig::default(),
        }
    }
}

impl DataConfig {
    /// Dataset column value: the explicit name, else the directory name,
    /// else the format.
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        self.path
            .as_deref()
            .and_then(|p| p.file_name())
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.format.name().to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub knn_k: usize,
    pub trust_k: usize,
    /// 0 disables subsampling.
    pub trust_cap: usize,
    pub all_rows: bool,
    pub neutral_test_embedding: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            knn_k: 5,
            trust_k: 5,
            trust_cap: 2000,
            all_rows: false,
            neutral_test_embedding: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub variants: Vec<Variant>,
    pub r_values: Vec<usize>,
    pub depth: usize,
    pub ring: bool,
    pub half_mode: HalfMode,
    pub seeds: Vec<u64>,
    pub ff: FFLayerConfig,
    /// 0 pretrains every encoder connection before the latent one.
    pub ff_layers: usize,
    /// `seed` is ignored; each run derives its own from the run seed.
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

/// 25, 50, ..., 500.
pub fn default_r_values() -> Vec<usize> {
    (25..=500).step_by(25).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataConfig::default(),
            variants: Variant::ALL.to_vec(),
            r_values: default_r_values(),
            depth: 4,
            ring: false,
            half_mode: HalfMode::Disjoint,
            seeds: vec![1],
            ff: FFLayerConfig::default(),
            ff_layers: 0,
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            out_dir: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Empty or `none` clears an optional value.
fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl ExperimentConfig {
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "dataset.format" => self.data.format = v.parse()?,
            "dataset.path" => self.data.path = parse_opt::<String>(key, v)?.map(PathBuf::from),
            "dataset.name" => self.data.name = parse_opt(key, v)?,
            "dataset.label_offset" => self.data.label_offset = parse(key, v)?,
            "dataset.num_classes" => self.data.num_classes = parse_opt(key, v)?,
            "dataset.max_train" => self.data.max_train = parse_opt(key, v)?,
            "dataset.max_test" => self.data.max_test = parse_opt(key, v)?,
            "synth.classes" => self.data.synth.classes = parse(key, v)?,
            "synth.per_class" => self.data.synth.per_class = parse(key, v)?,
            "synth.test_per_class" => self.data.synth.test_per_class = parse(key, v)?,
            "synth.features" => self.data.synth.features = parse(key, v)?,
            "synth.spread" => self.data.synth.spread = parse(key, v)?,
            "synth.seed" => self.data.synth.seed = parse(key, v)?,
            "variants" => self.variants = parse_list(key, v)?,
            "r" => self.r_values = parse_list(key, v)?,
            "depth" => self.depth = parse(key, v)?,
            "ring" => self.ring = parse_bool(key, v)?,
            "half_mode" => {
                self.half_mode = match v.to_ascii_lowercase().as_str() {
                    "disjoint" => HalfMode::Disjoint,
                    "mirrored" => HalfMode::Mirrored,
                    _ => return Err(Error::Config(format!("bad half_mode `{v}`"))),
                }
            }
            "seeds" => self.seeds = parse_list(key, v)?,
            "ff.theta" => self.ff.theta = parse(key, v)?,
            "ff.epochs" => self.ff.epochs = parse(key, v)?,
            "ff.learning_rate" => self.ff.learning_rate = parse(key, v)?,
            "ff.batch_size" => self.ff.batch_size = parse(key, v)?,
            "ff.optimizer" => {
                self.ff.optimizer = match v.to_ascii_lowercase().as_str() {
                    "adam" => FFOptimizer::Adam,
                    "sgd" => FFOptimizer::Sgd,
                    _ => return Err(Error::Config(format!("bad ff.optimizer `{v}`"))),
                }
            }
            "ff.normalize_between" => self.ff.normalize_between = parse_bool(key, v)?,
            "ff.layers" => self.ff_layers = parse(key, v)?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.learning_rate" => self.train.learning_rate = parse(key, v)?,
            "train.shuffle" => self.train.shuffle = parse_bool(key, v)?,
            "eval.knn_k" => self.eval.knn_k = parse(key, v)?,
            "eval.trust_k" => self.eval.trust_k = parse(key, v)?,
            "eval.trust_cap" => self.eval.trust_cap = parse(key, v)?,
            "eval.all_rows" => self.eval.all_rows = parse_bool(key, v)?,
            "eval.neutral_test_embedding" => self.eval.neutral_test_embedding = parse_bool(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "jobs" => self.jobs = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical rendering of every key, in [`KEYS`] order.
    pub fn to_kv_string(&self) -> String {
        let d = &self.data;
        let s = &d.synth;
        let half = match self.half_mode {
            HalfMode::Disjoint => "disjoint",
            HalfMode::Mirrored => "mirrored",
        };
        let optimizer = match self.ff.optimizer {
            FFOptimizer::Adam => "adam",
            FFOptimizer::Sgd => "sgd",
        };
        let values: Vec<String> = vec![
            d.format.name().into(),
            opt(&d.path.as_ref().map(|p| p.display().to_string())),
            opt(&d.name),
            d.label_offset.to_string(),
            opt(&d.num_classes),
            opt(&d.max_train),
            opt(&d.max_test),
            s.classes.to_string(),
            s.per_class.to_string(),
            s.test_per_class.to_string(),
            s.features.to_string(),
            s.spread.to_string(),
            s.seed.to_string(),
            self.variants
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(","),
            join(&self.r_values),
            self.depth.to_string(),
            self.ring.to_string(),
            half.into(),
            join(&self.seeds),
            self.ff.theta.to_string(),
            self.ff.epochs.to_string(),
            self.ff.learning_rate.to_string(),
            self.ff.batch_size.to_string(),
            optimizer.into(),
            self.ff.normalize_between.to_string(),
            self.ff_layers.to_string(),
            self.train.epochs.to_string(),
            self.train.batch_size.to_string(),
            self.train.learning_rate.to_string(),
            self.train.shuffle.to_string(),
            self.eval.knn_k.to_string(),
            self.eval.trust_k.to_string(),
            self.eval.trust_cap.to_string(),
            self.eval.all_rows.to_string(),
            self.eval.neutral_test_embedding.to_string(),
            self.out_dir.display().to_string(),
            self.jobs.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut out = String::new();
        for ((key, _), value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_kv_string().as_bytes()))
    }

    /// Checks everything that does not depend on the loaded data.
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("variant list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.r_values.is_empty() || self.r_values.contains(&0) {
            return Err(Error::Config(
                "r values must be a non-empty list of positive integers".into(),
            ));
        }
        if self.depth < 2 {
            return Err(Error::Config(format!(
                "depth must be at least 2, got {}",
                self.depth
            )));
        }
        if self.eval.knn_k == 0 || self.eval.trust_k == 0 {
            return Err(Error::Config("evaluation k values must be positive".into()));
        }
        if self.data.format != DataFormat::Synth && self.data.path.is_none() {
            return Err(Error::Config(format!(
                "{} datasets need dataset.path",
                self.data.format.name()
            )));
        }
        self.ff.validate()?;
        self.train.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_r_list() {
        let r = default_r_values();
        assert_eq!(r.len(), 20);
        assert_eq!(r.first(), Some(&25));
        assert_eq!(r.last(), Some(&500));
        assert!(r.windows(2).all(|w| w[1] - w[0] == 25));
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("dataset.format", "idx").unwrap();
        cfg.set("dataset.path", "/data/mnist").unwrap();
        cfg.set("variants", "MEUD, MEUD_FF_Coop").unwrap();
        cfg.set("r", "50,100").unwrap();
        cfg.set("seeds", "1,2,3").unwrap();
        cfg.set("ff.optimizer", "sgd").unwrap();
        cfg.set("dataset.max_train", "2000").unwrap();
        let text = cfg.to_kv_string();
        assert_eq!(text.lines().count(), KEYS.len());
        let back = ExperimentConfig::from_kv_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn comments_and_errors() {
        let cfg = ExperimentConfig::from_kv_str("# comment\n\ntrain.epochs = 3\n").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert!(ExperimentConfig::from_kv_str("nonsense").is_err());
        assert!(ExperimentConfig::from_kv_str("bogus = 1").is_err());
        let err = ExperimentConfig::from_kv_str("depth = x").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.variants.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.data.format = DataFormat::Idx;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.train.epochs += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
