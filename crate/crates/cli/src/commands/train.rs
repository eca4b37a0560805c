//! `train`: fits the MNIST classifier and writes a checkpoint.

use std::path::{Path, PathBuf};

use clap::Args;
use onn_train::mnist::{load_split, Split};
use onn_train::model::PAPER_DIMS;
use onn_train::train::{Optimizer, StepDecay};
use onn_train::{save_checkpoint, train, Dataset, OnnModel, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::{overlay, set, write_effective, CliError, Global};
use crate::output::write_records;
use crate::Outcome;

pub const CHECKPOINT_DIR: &str = "checkpoint";

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Directory with the four MNIST IDX files.
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Learning-rate multiplier applied every `lr_every` epochs.
    #[arg(long)]
    pub lr_factor: Option<f64>,
    #[arg(long)]
    pub lr_every: Option<usize>,
    /// adam or sgd.
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Use only the first N training images (0 = all).
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Score on the first N test images.
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    pub mnist_dir: PathBuf,
    pub layer_dims: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_factor: f64,
    pub lr_every: usize,
    pub optimizer: String,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            mnist_dir: "data/mnist".into(),
            layer_dims: PAPER_DIMS.to_vec(),
            epochs: c.epochs,
            batch_size: c.batch_size,
            lr: c.lr_schedule.initial,
            lr_factor: c.lr_schedule.factor,
            lr_every: c.lr_schedule.every,
            optimizer: "adam".into(),
            n_train: 0,
            n_test: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub final_loss: Option<f64>,
    pub test_accuracy: f64,
    pub checkpoint: String,
}

pub fn resolve(args: &TrainArgs, file: Option<&toml::Table>) -> Result<TrainParams, CliError> {
    let mut p = overlay(&TrainParams::default(), file)?;
    set(&mut p.mnist_dir, args.mnist_dir.clone());
    set(&mut p.epochs, args.epochs);
    set(&mut p.batch_size, args.batch_size);
    set(&mut p.lr, args.lr);
    set(&mut p.lr_factor, args.lr_factor);
    set(&mut p.lr_every, args.lr_every);
    set(&mut p.optimizer, args.optimizer.clone());
    parse_optimizer(&p.optimizer)?;
    set(&mut p.n_train, args.n_train);
    set(&mut p.n_test, args.n_test);
    if p.n_test == 0 {
        return Err(CliError::params("n_test must be >= 1"));
    }
    Ok(p)
}

pub fn parse_optimizer(s: &str) -> Result<Optimizer, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "adam" => Ok(Optimizer::ADAM),
        "sgd" => Ok(Optimizer::Sgd),
        _ => Err(CliError::params(format!("optimizer must be adam or sgd (got `{s}`)"))),
    }
}

/// Loads a split; every failure, including a missing file, is a data error.
pub fn load_dataset(dir: &Path, split: Split, n: usize) -> Result<Dataset, CliError> {
    let data = load_split(dir, split).map_err(|e| CliError::data(format!("MNIST {}: {e}", dir.display())))?;
    if n > data.len() {
        return Err(CliError::params(format!(
            "requested {n} images but {} has {}",
            dir.display(),
            data.len()
        )));
    }
    Ok(if n == 0 { data } else { data.head(n) })
}

pub fn run(args: &TrainArgs, file: Option<&toml::Table>, global: &Global) -> Result<Outcome, CliError> {
    let p = resolve(args, file)?;
    let cfg = TrainConfig {
        epochs: p.epochs,
        batch_size: p.batch_size,
        lr_schedule: StepDecay {
            initial: p.lr,
            factor: p.lr_factor,
            every: p.lr_every,
        },
        optimizer: parse_optimizer(&p.optimizer)?,
        seed: global.seed,
    };
    cfg.validate()?;
    let mut model = OnnModel::new(&p.layer_dims)?.init_weights(global.seed);
    let data = load_dataset(&p.mnist_dir, Split::Train, p.n_train)?;
    let test = load_dataset(&p.mnist_dir, Split::Test, p.n_test)?;
    let report = train(&mut model, &data, &cfg, Some(&test))?;
    let test_accuracy = match report.final_test_accuracy() {
        Some(a) => a,
        None => onn_train::evaluate(&model, &test)?,
    };
    let ckpt = global.out_dir.join(CHECKPOINT_DIR);
    save_checkpoint(&model, &ckpt)?;
    let summary = TrainSummary {
        epochs: p.epochs,
        n_train: data.len(),
        n_test: test.len(),
        final_loss: report.epochs.last().map(|e| e.loss),
        test_accuracy,
        checkpoint: ckpt.to_string_lossy().into_owned(),
    };
    write_records(global, "train_metrics", &report.epochs)?;
    write_records(global, "train_summary", std::slice::from_ref(&summary))?;
    write_effective(global, "train", &p)?;
    let line = format!(
        "train: {} epochs on {} images, test accuracy {:.4} on {} images",
        p.epochs, summary.n_train, test_accuracy, summary.n_test
    );
    Ok(Outcome {
        summary: serde_json::to_value(&summary).expect("serializable"),
        line,
    })
}
