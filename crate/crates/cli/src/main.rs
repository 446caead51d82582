use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fcb::experiment::{cmd_eval, cmd_sweep, cmd_train, ExperimentConfig, KEYS};
use fcb::meud::Variant;

#[derive(Parser)]
#[command(
    name = "fcb",
    version,
    about = "Train, sweep and evaluate multi-encoding uni-decoding autoencoders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network and write its checkpoint and loss curve.
    Train(Common),
    /// Train and evaluate every (variant, r, seed) cell and write metrics.csv.
    Sweep(Common),
    /// Re-evaluate a saved checkpoint without training.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List every configuration key.
    Keys,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Idx,
    Cifar10,
    Synth,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Variant names, comma-separated (train uses the first).
    #[arg(long)]
    variant: Option<String>,
    /// Target dimensions, comma-separated (train uses the first).
    #[arg(long)]
    r: Option<String>,
    /// Run seeds, comma-separated (train uses the first).
    #[arg(long)]
    seed: Option<String>,
    /// Upper bound on concurrently running sweep cells.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Zero the label block of test samples instead of embedding their label.
    #[arg(long)]
    neutral_test_embedding: bool,
    /// Any configuration key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    /// File keys first, then `--set`, then the dedicated flags.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects key=value, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(p) = &self.dataset {
            cfg.set("dataset.path", &p.to_string_lossy())?;
        }
        if let Some(f) = self.format {
            let name = match f {
                Format::Idx => "idx",
                Format::Cifar10 => "cifar10",
                Format::Synth => "synth",
            };
            cfg.set("dataset.format", name)?;
        }
        let lists = [
            ("variants", &self.variant),
            ("r", &self.r),
            ("seeds", &self.seed),
        ];
        for (key, value) in lists {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(o) = &self.out_dir {
            cfg.out_dir = o.clone();
        }
        if self.neutral_test_embedding {
            cfg.eval.neutral_test_embedding = true;
        }
        Ok(cfg)
    }
}

fn first<T: Copy>(items: &[T], what: &str) -> Result<T> {
    match items.first() {
        Some(&x) => Ok(x),
        None => bail!("no {what} given"),
    }
}

fn train(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let variant: Variant = first(&cfg.variants, "variant")?;
    let r = first(&cfg.r_values, "r")?;
    let seed = first(&cfg.seeds, "seed")?;
    eprintln!("training {variant} r={r} seed={seed}");
    let out = cmd_train(&cfg, variant, r, seed, |s| {
        eprintln!(
            "epoch {:>4}  loss {:.6e}  {:.2}s",
            s.epoch + 1,
            s.loss,
            s.elapsed.as_secs_f64()
        );
    })?;
    println!("{}", out.checkpoint.display());
    println!("{}", out.loss_csv.display());
    Ok(())
}

fn sweep(common: &Common) -> Result<bool> {
    let cfg = common.resolve()?;
    let cells = cfg.variants.len() * cfg.r_values.len() * cfg.seeds.len();
    eprintln!("sweeping {cells} cells with {} job(s)", cfg.jobs);
    let out = cmd_sweep(&cfg)?;
    for row in out.rows.iter().filter(|r| r.is_error()) {
        eprintln!(
            "cell {} r={} seed={} failed: {}",
            row.variant, row.r, row.seed, row.value
        );
    }
    println!("{}", out.metrics_csv.display());
    Ok(out.failures == 0)
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Train(c) => train(&c).map(|_| true),
        Command::Sweep(c) => sweep(&c),
        Command::Eval { checkpoint, common } => {
            let cfg = common.resolve()?;
            let out = cmd_eval(&cfg, &checkpoint)?;
            println!("{}", out.metrics_csv.display());
            Ok(true)
        }
        Command::Keys => {
            let defaults = ExperimentConfig::default().to_kv_string();
            for ((key, help), line) in KEYS.iter().zip(defaults.lines()) {
                let default = line.split_once(" = ").map_or("", |(_, v)| v);
                println!("{key:<30} {help} [default: {default}]");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
