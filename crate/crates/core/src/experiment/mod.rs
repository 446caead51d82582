//! End-to-end runs: load data, pretrain, train, embed, evaluate and write
//! CSV/checkpoint artifacts.
//!
//! Everything a run draws at random comes from its run seed through
//! [`derive_seed`], so a checkpoint (which stores the run seed) is enough to
//! rebuild the exact training matrix it was trained on.

mod config;
mod data;
mod report;

use std::path::{Path, PathBuf};

pub use config::{
    default_r_values, DataConfig, DataFormat, EvalConfig, ExperimentConfig, SynthConfig, KEYS,
};
pub use data::{load_splits, Splits};
pub use report::{
    loss_csv, metrics_csv, read_metrics_csv, write_file, MetricRow, Provenance, FORMAT_VERSION,
    LOSS_HEADER, METRICS_HEADER,
};

use crate::dataset::{
    build_training_matrix_with, embed_labels, EncodedMatrix, LabeledDataset, Polarity,
};
use crate::error::{Error, Result};
use crate::eval::{
    classification_metrics, gnb_fit_predict, knn_classify, subsample_indices, trustworthiness,
    ClassificationReport,
};
use crate::ff::{pretrain_stack_logged, PretrainedStack};
use crate::meud::{
    extract_embedding, init_params, load_checkpoint, save_checkpoint, ModelParams, NetworkConfig,
    Variant,
};
use crate::numerics::{derive_seed, Matrix};
use crate::par::{with_jobs, Exec};
use crate::train::{train_with, EpochStats, TrainConfig, TrainReport};

const STREAM_NEGATIVES: u64 = 1;
const STREAM_FF: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_TRUST: u64 = 4;

/// Metric names in output order.
pub const METRIC_NAMES: [&str; 13] = [
    "trustworthiness",
    "knn_accuracy",
    "knn_precision",
    "knn_recall",
    "knn_f1",
    "knn_jaccard",
    "knn_roc_auc",
    "gnb_accuracy",
    "gnb_precision",
    "gnb_recall",
    "gnb_f1",
    "gnb_jaccard",
    "gnb_roc_auc",
];

pub fn network_config(
    n: usize,
    variant: Variant,
    r: usize,
    depth: usize,
    ring: bool,
    seed: u64,
) -> Result<NetworkConfig> {
    if r >= n {
        return Err(Error::Config(format!(
            "r = {r} must be below the input width {n}"
        )));
    }
    NetworkConfig::for_dims(n, r, depth, variant, seed)?.with_ring(ring && variant.uses_coop())
}

/// The label-embedded training matrix of a run.
pub fn training_matrix(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    seed: u64,
) -> Result<EncodedMatrix> {
    build_training_matrix_with(train, derive_seed(seed, STREAM_NEGATIVES), cfg.half_mode)
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub training: EncodedMatrix,
    pub ff: Option<PretrainedStack>,
    pub report: TrainReport,
}

impl TrainedModel {
    pub fn params(&self) -> &ModelParams {
        &self.report.params
    }
}

/// Builds the training matrix, pretrains the encoder when the variant asks
/// for it and trains the whole network.
pub fn train_model(
    cfg: &ExperimentConfig,
    splits: &Splits,
    variant: Variant,
    r: usize,
    seed: u64,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainedModel> {
    let net = network_config(splits.num_features(), variant, r, cfg.depth, cfg.ring, seed)?;
    let training = training_matrix(cfg, &splits.train, seed)?;
    let ff = if variant.uses_ff() {
        let encoder = net.encoder_widths();
        let max = encoder.len() - 1;
        let count = if cfg.ff_layers == 0 {
            max
        } else {
            cfg.ff_layers.min(max)
        };
        let stack = pretrain_stack_logged(
            &training,
            &encoder[..=count],
            &cfg.ff,
            derive_seed(seed, STREAM_FF),
        )?;
        Some(stack)
    } else {
        None
    };
    let params = init_params(&net, ff.as_ref().map(|s| s.weights.as_slice()))?;
    let train_cfg = TrainConfig {
        seed: derive_seed(seed, STREAM_SHUFFLE),
        ..cfg.train.clone()
    };
    let report = train_with(params, &training.data, &train_cfg, on_epoch)?;
    Ok(TrainedModel {
        training,
        ff,
        report,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub trustworthiness: f64,
    /// Rows the trustworthiness was computed on.
    pub trust_rows: usize,
    pub knn: ClassificationReport,
    pub gnb: ClassificationReport,
}

impl Evaluation {
    /// `(metric, value)` in [`METRIC_NAMES`] order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("trustworthiness", self.trustworthiness)];
        let names = METRIC_NAMES[1..].iter();
        let values = self.knn.entries().into_iter().chain(self.gnb.entries());
        out.extend(names.zip(values).map(|(n, (_, v))| (*n, v)));
        out
    }
}

/// Test samples as the encoder sees them: the label block carries the true
/// label, or zeros when `neutral` is set.
pub fn encode_test(test: &LabeledDataset, neutral: bool) -> Result<Matrix> {
    if neutral {
        let p = test.num_classes();
        let mut x = test.samples().clone();
        for i in 0..x.rows() {
            x.row_mut(i)[..p].fill(0.0);
        }
        Ok(x)
    } else {
        Ok(embed_labels(test, Polarity::Positive, 0)?.data)
    }
}

/// Trustworthiness of the embedding of the evaluation rows against their
/// encoder inputs, plus KNN and Gaussian naive Bayes fitted on the
/// evaluation rows' embeddings and scored on the test split.
pub fn evaluate(
    params: &ModelParams,
    training: &EncodedMatrix,
    test: &LabeledDataset,
    eval: &EvalConfig,
    seed: u64,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Config(
            "evaluation needs a non-empty test split".into(),
        ));
    }
    let rows: Vec<usize> = if eval.all_rows {
        (0..training.rows()).collect()
    } else {
        training.positive_rows()
    };
    let x = training.data.select_rows(&rows);
    let labels: Vec<usize> = rows.iter().map(|&i| training.source_labels[i]).collect();
    let emb = extract_embedding(params, &x)?;

    let cap = if eval.trust_cap == 0 {
        rows.len()
    } else {
        eval.trust_cap
    };
    let sub = subsample_indices(rows.len(), cap, derive_seed(seed, STREAM_TRUST));
    let trust = trustworthiness(&x.select_rows(&sub), &emb.select_rows(&sub), eval.trust_k)?;

    let test_emb = extract_embedding(params, &encode_test(test, eval.neutral_test_embedding)?)?;
    let p = training.num_classes;
    let knn = knn_classify(&emb, &labels, &test_emb, eval.knn_k, p)?;
    let knn = classification_metrics(test.labels(), &knn.predicted, &knn.scores)?;
    let gnb = gnb_fit_predict(&emb, &labels, &test_emb, p)?;
    let gnb = classification_metrics(test.labels(), &gnb.predicted, &gnb.scores)?;
    Ok(Evaluation {
        trustworthiness: trust,
        trust_rows: sub.len(),
        knn,
        gnb,
    })
}

fn run_name(variant: Variant, r: usize, seed: u64) -> String {
    format!("{}_r{r}_s{seed}", variant.name())
}

fn provenance(cfg: &ExperimentConfig) -> Provenance {
    Provenance::new()
        .with("config_sha256", cfg.hash())
        .with("dataset", cfg.data.display_name())
        .with(
            "seeds",
            cfg.seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        )
        .with(
            "seed_derivation",
            "splitmix64(run_seed, stream) negatives=1 ff=2 shuffle=3 trust=4",
        )
}

fn eval_provenance(cfg: &ExperimentConfig) -> Provenance {
    provenance(cfg)
        .with("trust_k", cfg.eval.trust_k)
        .with("trust_cap", cfg.eval.trust_cap)
        .with("knn_k", cfg.eval.knn_k)
        .with(
            "population",
            if cfg.eval.all_rows { "all" } else { "positive" },
        )
        .with(
            "test_label_block",
            if cfg.eval.neutral_test_embedding {
                "zeros"
            } else {
                "true_label"
            },
        )
}

fn metric_rows(
    dataset: &str,
    variant: Variant,
    r: usize,
    seed: u64,
    ev: &Evaluation,
) -> Vec<MetricRow> {
    ev.metrics()
        .into_iter()
        .map(|(metric, value)| MetricRow {
            dataset: dataset.to_string(),
            variant: variant.name().to_string(),
            r: r.to_string(),
            seed: seed.to_string(),
            metric: metric.to_string(),
            value: value.to_string(),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub checkpoint: PathBuf,
    pub loss_csv: PathBuf,
}

/// Trains one network and writes `<variant>_r<r>_s<seed>.ckpt` and
/// `<variant>_r<r>_s<seed>_loss.csv` into the output directory.
pub fn cmd_train(
    cfg: &ExperimentConfig,
    variant: Variant,
    r: usize,
    seed: u64,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let splits = load_splits(&cfg.data)?;
    let model = train_model(cfg, &splits, variant, r, seed, on_epoch)?;
    let name = run_name(variant, r, seed);
    let checkpoint = cfg.out_dir.join(format!("{name}.ckpt"));
    let loss_path = cfg.out_dir.join(format!("{name}_loss.csv"));
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    save_checkpoint(model.params(), &checkpoint)?;
    let prov = provenance(cfg)
        .with("variant", variant.name())
        .with("r", r)
        .with("seed", seed);
    write_file(
        &loss_path,
        &loss_csv(&prov, model.ff.as_ref(), &model.report)?,
    )?;
    Ok(TrainOutcome {
        model,
        checkpoint,
        loss_csv: loss_path,
    })
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Cell rows followed by the summary rows.
    pub rows: Vec<MetricRow>,
    pub failures: usize,
    pub metrics_csv: PathBuf,
}

/// Runs every (variant, r, seed) cell, at most `cfg.jobs` at a time, and
/// writes `metrics.csv` plus one loss curve per cell under `loss/`.
///
/// A failing cell yields a single `error` row and the sweep carries on. The
/// summary block holds, for each variant and metric, the mean over all
/// successful cells of that variant, with `r = mean` and `seed = all`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let splits = load_splits(&cfg.data)?;
    let dataset = cfg.data.display_name();
    let cells: Vec<(Variant, usize, u64)> = cfg
        .variants
        .iter()
        .flat_map(|&v| {
            cfg.r_values
                .iter()
                .flat_map(move |&r| cfg.seeds.iter().map(move |&s| (v, r, s)))
        })
        .collect();

    let loss_dir = cfg.out_dir.join("loss");
    let run_cell = |&(variant, r, seed): &(Variant, usize, u64)| -> Result<Evaluation> {
        let model = train_model(cfg, &splits, variant, r, seed, |_| {})?;
        let prov = provenance(cfg)
            .with("variant", variant.name())
            .with("r", r)
            .with("seed", seed);
        let path = loss_dir.join(format!("{}_loss.csv", run_name(variant, r, seed)));
        write_file(&path, &loss_csv(&prov, model.ff.as_ref(), &model.report)?)?;
        evaluate(
            model.params(),
            &model.training,
            &splits.test,
            &cfg.eval,
            seed,
        )
    };
    let results = with_jobs(cfg.jobs, || {
        Exec::default().map_range(cells.len(), |i| run_cell(&cells[i]))
    });

    let mut rows = Vec::new();
    let mut failures = 0;
    for (&(variant, r, seed), result) in cells.iter().zip(&results) {
        match result {
            Ok(ev) => rows.extend(metric_rows(&dataset, variant, r, seed, ev)),
            Err(e) => {
                failures += 1;
                rows.push(MetricRow {
                    dataset: dataset.clone(),
                    variant: variant.name().to_string(),
                    r: r.to_string(),
                    seed: seed.to_string(),
                    metric: "error".into(),
                    value: e.to_string(),
                });
            }
        }
    }
    for &variant in &cfg.variants {
        let evals: Vec<&Evaluation> = cells
            .iter()
            .zip(&results)
            .filter(|(c, _)| c.0 == variant)
            .filter_map(|(_, r)| r.as_ref().ok())
            .collect();
        if evals.is_empty() {
            continue;
        }
        for (k, name) in METRIC_NAMES.iter().enumerate() {
            let mean = evals.iter().map(|e| e.metrics()[k].1).sum::<f64>() / evals.len() as f64;
            rows.push(MetricRow {
                dataset: dataset.clone(),
                variant: variant.name().to_string(),
                r: "mean".into(),
                seed: "all".into(),
                metric: name.to_string(),
                value: mean.to_string(),
            });
        }
    }

    let path = cfg.out_dir.join("metrics.csv");
    write_file(&path, &metrics_csv(&eval_provenance(cfg), &rows)?)?;
    Ok(SweepOutcome {
        rows,
        failures,
        metrics_csv: path,
    })
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub rows: Vec<MetricRow>,
    pub metrics_csv: PathBuf,
}

/// Re-evaluates a saved model on the configured dataset, rebuilding the
/// training matrix from the seed stored in the checkpoint. Writes
/// `<checkpoint stem>_metrics.csv` into the output directory.
pub fn cmd_eval(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<EvalOutcome> {
    let params = load_checkpoint(checkpoint)?;
    let splits = load_splits(&cfg.data)?;
    let net = &params.config;
    if splits.num_features() != net.input_dim() {
        return Err(Error::shape(
            "cmd_eval",
            (splits.train.len(), splits.num_features()),
            (net.input_dim(), net.target_dim()),
        ));
    }
    let seed = net.seed;
    let training = training_matrix(cfg, &splits.train, seed)?;
    let ev = evaluate(&params, &training, &splits.test, &cfg.eval, seed)?;
    let rows = metric_rows(
        &cfg.data.display_name(),
        net.variant,
        net.target_dim(),
        seed,
        &ev,
    );

    let bytes = std::fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let prov = eval_provenance(cfg).with("checkpoint_sha256", {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(&bytes))
    });
    let stem = checkpoint
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".into());
    let path = cfg.out_dir.join(format!("{stem}_metrics.csv"));
    write_file(&path, &metrics_csv(&prov, &rows)?)?;
    Ok(EvalOutcome {
        rows,
        metrics_csv: path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.data.synth = SynthConfig {
            classes: 3,
            per_class: 16,
            test_per_class: 4,
            features: 20,
            spread: 0.05,
            seed: 9,
        };
        cfg.variants = vec![Variant::Meud, Variant::MeudFfCoop];
        cfg.r_values = vec![4, 6];
        cfg.depth = 3;
        cfg.train.epochs = 2;
        cfg.train.batch_size = 8;
        cfg.ff.epochs = 1;
        cfg.eval.trust_k = 3;
        cfg.out_dir = out.to_path_buf();
        cfg
    }

    #[test]
    fn train_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.train.epochs = 1;
        let out = cmd_train(&cfg, Variant::Meud, 4, 1, |_| {}).unwrap();
        assert!(out.checkpoint.is_file());
        let text = std::fs::read_to_string(&out.loss_csv).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "epoch,loss,seconds");
        assert_eq!(data.len(), 2);
        assert!(text.starts_with("# format_version=1\n# config_sha256="));
    }

    #[test]
    fn ff_log_precedes_epochs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let out = cmd_train(&cfg, Variant::MeudFfCoop, 4, 1, |_| {}).unwrap();
        let text = std::fs::read_to_string(&out.loss_csv).unwrap();
        let ff = text.find("# ff_pretraining").unwrap();
        let header = text.find("epoch,loss,seconds").unwrap();
        assert!(ff < header);
        assert_eq!(text.matches("# ff,").count(), 2 * cfg.ff.epochs);
    }

    #[test]
    fn sweep_rows_and_eval_agree() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let sweep = cmd_sweep(&cfg).unwrap();
        assert_eq!(sweep.failures, 0);
        let cells = 2 * 2;
        assert_eq!(sweep.rows.len(), cells * 13 + 2 * 13);
        let text = std::fs::read_to_string(&sweep.metrics_csv).unwrap();
        assert_eq!(read_metrics_csv(&text).unwrap(), sweep.rows);

        let trained = cmd_train(&cfg, Variant::MeudFfCoop, 6, 1, |_| {}).unwrap();
        let ev = cmd_eval(&cfg, &trained.checkpoint).unwrap();
        let from_sweep: Vec<&MetricRow> = sweep
            .rows
            .iter()
            .filter(|r| r.variant == "MEUD_FF_Coop" && r.r == "6")
            .collect();
        assert_eq!(ev.rows.iter().collect::<Vec<_>>(), from_sweep);
        let first = std::fs::read(&ev.metrics_csv).unwrap();
        let again = cmd_eval(&cfg, &trained.checkpoint).unwrap();
        assert_eq!(std::fs::read(&again.metrics_csv).unwrap(), first);
    }

    #[test]
    fn failed_cells_become_error_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.variants = vec![Variant::Meud];
        cfg.r_values = vec![4, 50];
        let sweep = cmd_sweep(&cfg).unwrap();
        assert_eq!(sweep.failures, 1);
        let errors: Vec<_> = sweep.rows.iter().filter(|r| r.is_error()).collect();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].r, "50");
        assert_eq!(sweep.rows.len(), 1 + 13 + 13);
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let trained = cmd_train(&cfg, Variant::Meud, 4, 1, |_| {}).unwrap();
        let mut other = cfg.clone();
        other.data.synth.features = 30;
        assert!(matches!(
            cmd_eval(&other, &trained.checkpoint),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn neutral_test_encoding_zeroes_labels() {
        let ds = crate::dataset::synth_blobs(3, 2, 6, 0.0, 1).unwrap();
        let x = encode_test(&ds, true).unwrap();
        assert!(x.row_iter().all(|r| r[..3].iter().all(|&v| v == 0.0)));
        assert_eq!(x.row(0)[3..], ds.samples().row(0)[3..]);
        let y = encode_test(&ds, false).unwrap();
        assert_eq!(y.row(4)[..3], [0.0, 1.0, 0.0]);
    }
}
