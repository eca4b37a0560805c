//! Checkpoint directories: `manifest.toml` plus one tensor file per layer.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use onn_core::tensor::{load_matrix, save_tensor};
use onn_core::{OnnError, Result};
use serde::{Deserialize, Serialize};

use crate::model::{Layer, OnnModel, CLAMP_EPS};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BnEntry {
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format: String,
    layer_dims: Vec<usize>,
    clamp_eps: f64,
    seed: u64,
    weights: Vec<String>,
    bn: Vec<BnEntry>,
}

fn weight_file(n: usize) -> String {
    format!("layer{n}_weights.onnt")
}

pub fn save_checkpoint(model: &OnnModel, dir: &Path) -> Result<()> {
    model.validate()?;
    fs::create_dir_all(dir)?;
    let weights: Vec<String> = (0..model.layers.len()).map(weight_file).collect();
    for (l, name) in model.layers.iter().zip(&weights) {
        save_tensor(&dir.join(name), &l.weights.clone().into_dyn())?;
    }
    let manifest = Manifest {
        format: "onn-checkpoint-1".into(),
        layer_dims: model.dims(),
        clamp_eps: CLAMP_EPS,
        seed: model.seed,
        weights,
        bn: model
            .layers
            .iter()
            .map(|l| BnEntry {
                gamma: l.bn_gamma.to_vec(),
                beta: l.bn_beta.to_vec(),
                running_mean: l.bn_running_mean.to_vec(),
                running_var: l.bn_running_var.to_vec(),
                momentum: l.bn_momentum,
            })
            .collect(),
    };
    let text = toml::to_string(&manifest).map_err(|e| OnnError::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<OnnModel> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| OnnError::Format(format!("{MANIFEST}: {e}")))?;
    let n = m.layer_dims.len().saturating_sub(1);
    if n == 0 || m.weights.len() != n || m.bn.len() != n {
        return Err(OnnError::Format(format!("{MANIFEST}: inconsistent layer counts")));
    }
    let mut layers = Vec::with_capacity(n);
    for (k, (file, bn)) in m.weights.iter().zip(m.bn).enumerate() {
        let weights = load_matrix(&dir.join(file))?;
        if weights.dim() != (m.layer_dims[k], m.layer_dims[k + 1]) {
            return Err(OnnError::Shape(format!("{file} has shape {:?}", weights.dim())));
        }
        layers.push(Layer {
            weights,
            bn_gamma: Array1::from(bn.gamma),
            bn_beta: Array1::from(bn.beta),
            bn_running_mean: Array1::from(bn.running_mean),
            bn_running_var: Array1::from(bn.running_var),
            bn_momentum: bn.momentum,
        });
    }
    let model = OnnModel {
        layers,
        input_dim: m.layer_dims[0],
        seed: m.seed,
    };
    model.validate()?;
    Ok(model)
}
