use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
dataset.format = synth
synth.classes = 3
synth.per_class = 16
synth.test_per_class = 4
synth.features = 20
variants = MEUD
r = 4
depth = 3
train.epochs = 1
train.batch_size = 8
ff.epochs = 1
eval.trust_k = 3
";

fn fcb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let p = dir.join("tiny.cfg");
    std::fs::write(&p, TINY).unwrap();
    p.to_string_lossy().into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();
    let res = fcb(&["train", "--config", &cfg, "--out-dir", out, "--seed", "7"]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let ckpt = out_dir.join("MEUD_r4_s7.ckpt");
    assert!(ckpt.is_file());
    let loss = data_lines(&out_dir.join("MEUD_r4_s7_loss.csv"));
    assert_eq!(loss[0], "epoch,loss,seconds");
    assert_eq!(loss.len(), 2);

    let res = fcb(&[
        "eval",
        "--config",
        &cfg,
        "--out-dir",
        out,
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rows = data_lines(&out_dir.join("MEUD_r4_s7_metrics.csv"));
    assert_eq!(rows[0], "dataset,variant,r,seed,metric,value");
    assert_eq!(rows.len(), 1 + 13);
}

#[test]
fn sweep_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("sweep");
    let res = fcb(&[
        "sweep",
        "--config",
        &cfg,
        "--variant",
        "MEUD,MEUD_Coop",
        "--r",
        "4,5",
        "--jobs",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rows = data_lines(&out_dir.join("metrics.csv"));
    assert_eq!(rows.len(), 1 + 4 * 13 + 2 * 13);
    assert_eq!(rows.iter().filter(|r| r.contains(",mean,all,")).count(), 26);
}

#[test]
fn failing_cell_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("bad");
    let res = fcb(&[
        "sweep",
        "--config",
        &cfg,
        "--r",
        "4,40",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    let rows = data_lines(&out_dir.join("metrics.csv"));
    assert_eq!(rows.iter().filter(|r| r.contains(",error,")).count(), 1);
}

#[test]
fn corrupt_checkpoint_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let bogus = dir.path().join("bogus.ckpt");
    std::fs::write(&bogus, b"not a checkpoint").unwrap();
    let res = fcb(&[
        "eval",
        "--config",
        &cfg,
        "--checkpoint",
        bogus.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));
}

#[test]
fn missing_dataset_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let res = fcb(&[
        "train",
        "--format",
        "idx",
        "--dataset",
        dir.path().join("nowhere").to_str().unwrap(),
        "--r",
        "50",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!res.status.success());
}

#[test]
fn unknown_key_is_rejected() {
    let res = fcb(&["train", "--set", "nope=1"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown key"));
}

#[test]
fn keys_lists_every_key() {
    let res = fcb(&["keys"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("eval.neutral_test_embedding"));
    assert!(text.contains("25,50,75"));
}
