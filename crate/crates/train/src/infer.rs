//! Running a trained model on the optical engine.

use ndarray::Array2;
use onn_core::engine::{matmul_batched, substream_seed, AdcRange, Mode, OpticalMatVec};
use onn_core::noise::SnrResult;
use onn_core::{OnnError, Result};
use serde::{Deserialize, Serialize};

use crate::mnist::Dataset;
use crate::model::{argmax_rows, squash, OnnModel};

pub const DEFAULT_SNR: f64 = 135.0;
pub const DEFAULT_ADC_BITS: u32 = 6;

/// Engine template for inference: nonlinear mode, given noise and ADC.
/// `fanout_j` is set per layer.
pub fn engine_config(snr: Option<f64>, adc_bits: Option<u32>, seed: u64) -> Result<OpticalMatVec> {
    let mut cfg = OpticalMatVec::new(Mode::Nonlinear, 1)?.with_seed(seed);
    if let Some(snr) = snr.filter(|s| s.is_finite()) {
        cfg = cfg.with_noise(SnrResult::from_snr(snr)?);
    }
    if let Some(bits) = adc_bits {
        cfg = cfg.with_adc(bits, AdcRange::PerChannel)?;
    }
    Ok(cfg)
}

/// The deployed operating point: SNR 135, 6-bit ADC.
pub fn default_engine(seed: u64) -> OpticalMatVec {
    engine_config(Some(DEFAULT_SNR), Some(DEFAULT_ADC_BITS), seed).expect("static parameters are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub n: usize,
    pub accuracy: f64,
    /// Row = true label, column = prediction.
    pub confusion: Vec<Vec<u64>>,
    pub predictions: Vec<usize>,
}

/// Integrated receiver outputs of every layer are produced by the engine;
/// batch norm and the squash stay electronic. Layer `n` draws noise from
/// substreams of its own seed, and each receiver channel auto-ranges its
/// ADC over the whole image set.
pub fn optical_logits(model: &OnnModel, images: &Array2<f64>, engine_cfg: &OpticalMatVec) -> Result<Array2<f64>> {
    model.validate()?;
    if images.ncols() != model.input_dim {
        return Err(OnnError::Shape(format!(
            "images have {} features, model expects {}",
            images.ncols(),
            model.input_dim
        )));
    }
    let last = model.layers.len() - 1;
    let mut a = images.clone();
    for (n, layer) in model.layers.iter().enumerate() {
        let cfg = OpticalMatVec {
            mode: Mode::Nonlinear,
            fanout_j: layer.outputs(),
            rng_seed: substream_seed(engine_cfg.rng_seed, n as u64, u64::MAX),
            ..engine_cfg.clone()
        };
        let mut z = matmul_batched(a.view(), layer.weights.view(), &cfg)?;
        layer.bn_inference(&mut z);
        a = if n < last { z.mapv(squash) } else { z };
    }
    Ok(a)
}

pub fn infer_optical(model: &OnnModel, data: &Dataset, engine_cfg: &OpticalMatVec) -> Result<InferenceReport> {
    if data.is_empty() {
        return Err(OnnError::domain("dataset", "is empty"));
    }
    let logits = optical_logits(model, &data.images, engine_cfg)?;
    let predictions = argmax_rows(&logits);
    let classes = model.n_outputs();
    let mut confusion = vec![vec![0u64; classes]; classes];
    let mut correct = 0;
    for (&p, &l) in predictions.iter().zip(&data.labels) {
        let l = l as usize;
        if l >= classes {
            return Err(OnnError::domain("labels", format!("label {l} has no output channel")));
        }
        confusion[l][p] += 1;
        correct += usize::from(p == l);
    }
    Ok(InferenceReport {
        n: data.len(),
        accuracy: correct as f64 / data.len() as f64,
        confusion,
        predictions,
    })
}
