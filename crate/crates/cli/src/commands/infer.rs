//! `infer`: a checkpoint run through the noisy optical engine.

use std::path::PathBuf;

use clap::Args;
use onn_train::infer::{engine_config, DEFAULT_ADC_BITS, DEFAULT_SNR};
use onn_train::mnist::Split;
use onn_train::{infer_optical, load_checkpoint};
use serde::{Deserialize, Serialize};

use crate::commands::train::{load_dataset, CHECKPOINT_DIR};
use crate::config::{overlay, set, write_effective, CliError, Global};
use crate::output::{write_matrix, write_records};
use crate::Outcome;

#[derive(Debug, Clone, Default, Args)]
pub struct InferArgs {
    /// Checkpoint directory (default: <out-dir>/checkpoint).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    /// Injected receiver SNR; `inf` disables noise.
    #[arg(long)]
    pub snr: Option<f64>,
    /// ADC resolution; 0 disables quantization.
    #[arg(long)]
    pub adc_bits: Option<u32>,
    /// Run the first N test images.
    #[arg(long)]
    pub n_images: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub mnist_dir: PathBuf,
    pub snr: f64,
    pub adc_bits: u32,
    pub n_images: usize,
}

impl Default for InferParams {
    fn default() -> Self {
        Self {
            checkpoint: None,
            mnist_dir: "data/mnist".into(),
            snr: DEFAULT_SNR,
            adc_bits: DEFAULT_ADC_BITS,
            n_images: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferSummary {
    pub n_images: usize,
    pub snr: f64,
    pub adc_bits: u32,
    pub accuracy: f64,
}

#[derive(Debug, Serialize)]
struct Prediction {
    index: usize,
    label: u8,
    prediction: usize,
}

pub fn resolve(args: &InferArgs, file: Option<&toml::Table>) -> Result<InferParams, CliError> {
    let mut p = overlay(&InferParams::default(), file)?;
    if args.checkpoint.is_some() {
        p.checkpoint = args.checkpoint.clone();
    }
    set(&mut p.mnist_dir, args.mnist_dir.clone());
    set(&mut p.snr, args.snr);
    set(&mut p.adc_bits, args.adc_bits);
    set(&mut p.n_images, args.n_images);
    if !(p.snr > 0.0) {
        return Err(CliError::params(format!("snr must be > 0 (got {})", p.snr)));
    }
    if p.n_images == 0 {
        return Err(CliError::params("n_images must be >= 1"));
    }
    Ok(p)
}

pub fn run(args: &InferArgs, file: Option<&toml::Table>, global: &Global) -> Result<Outcome, CliError> {
    let p = resolve(args, file)?;
    let engine = engine_config(Some(p.snr), (p.adc_bits > 0).then_some(p.adc_bits), global.seed)?;
    let ckpt = p.checkpoint.clone().unwrap_or_else(|| global.out_dir.join(CHECKPOINT_DIR));
    if !ckpt.is_dir() {
        return Err(CliError::missing(format!("checkpoint {} not found", ckpt.display())));
    }
    let model = load_checkpoint(&ckpt).map_err(|e| {
        let e = CliError::from(e);
        CliError {
            message: format!("checkpoint {}: {}", ckpt.display(), e.message),
            ..e
        }
    })?;
    let data = load_dataset(&p.mnist_dir, Split::Test, p.n_images)?;
    let report = infer_optical(&model, &data, &engine)?;
    let summary = InferSummary {
        n_images: report.n,
        snr: p.snr,
        adc_bits: p.adc_bits,
        accuracy: report.accuracy,
    };
    let preds: Vec<Prediction> = report
        .predictions
        .iter()
        .zip(&data.labels)
        .enumerate()
        .map(|(index, (&prediction, &label))| Prediction {
            index,
            label,
            prediction,
        })
        .collect();
    write_records(global, "infer_summary", std::slice::from_ref(&summary))?;
    write_matrix(global, "confusion", &report.confusion)?;
    write_records(global, "predictions", &preds)?;
    write_effective(global, "infer", &p)?;
    let line = format!(
        "infer: accuracy {:.4} on {} images (snr {}, adc bits {})",
        report.accuracy, report.n, p.snr, p.adc_bits
    );
    Ok(Outcome {
        summary: serde_json::to_value(&summary).expect("serializable"),
        line,
    })
}
