//! Fully connected network built on the homodyne nonlinearity.
//!
//! Each layer computes `Z_kj = Σ_i f_NL(X_ki, W_ij)`, written as
//! `√(1−X²)·W − X·√(1−W²)` so it runs as two matrix products, then batch
//! norm. Hidden layers squash the result into (−1, 1) with a scaled tanh so
//! it can be phase-encoded again; the last layer emits raw logits.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use onn_core::{OnnError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Weights are kept inside `[−1 + ε, 1 − ε]`.
pub const CLAMP_EPS: f64 = 1e-4;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
/// Hidden activations are `SQUASH·tanh(·)`, strictly inside (−1, 1).
pub const SQUASH: f64 = 1.0 - 1e-6;

pub const PAPER_DIMS: [usize; 4] = [784, 100, 10, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bn_gamma: Array1<f64>,
    pub bn_beta: Array1<f64>,
    pub bn_running_mean: Array1<f64>,
    pub bn_running_var: Array1<f64>,
    pub bn_momentum: f64,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bn_gamma: Array1::ones(outputs),
            bn_beta: Array1::zeros(outputs),
            bn_running_mean: Array1::zeros(outputs),
            bn_running_var: Array1::ones(outputs),
            bn_momentum: BN_MOMENTUM,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    /// Running-statistics batch norm: `γ·(z − μ)/√(σ² + ε) + β`.
    pub fn bn_inference(&self, z: &mut Array2<f64>) {
        for mut row in z.rows_mut() {
            Zip::from(&mut row)
                .and(&self.bn_running_mean)
                .and(&self.bn_running_var)
                .and(&self.bn_gamma)
                .and(&self.bn_beta)
                .for_each(|v, &m, &var, &g, &b| *v = g * (*v - m) / (var + BN_EPS).sqrt() + b);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnnModel {
    pub layers: Vec<Layer>,
    pub input_dim: usize,
    /// Seed of the last initialization.
    pub seed: u64,
}

/// `f_NL` summed over the input index for a whole batch.
pub fn nonlinear_layer(x: ArrayView2<f64>, w: ArrayView2<f64>) -> Array2<f64> {
    let cx = x.mapv(|v| (1.0 - v * v).sqrt());
    let cw = w.mapv(|v| (1.0 - v * v).sqrt());
    cx.dot(&w) - x.dot(&cw)
}

pub fn squash(v: f64) -> f64 {
    SQUASH * v.tanh()
}

impl OnnModel {
    /// Zero weights, identity batch norm.
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(OnnError::domain("dims", format!("need >= 2 positive sizes (got {dims:?})")));
        }
        Ok(Self {
            layers: dims.windows(2).map(|d| Layer::zeros(d[0], d[1])).collect(),
            input_dim: dims[0],
            seed: 0,
        })
    }

    /// The 784→100→10→10 classifier, initialized from `seed`.
    pub fn paper(seed: u64) -> Self {
        Self::new(&PAPER_DIMS).expect("static dims").init_weights(seed)
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, Layer::outputs)
    }

    /// Uniform weights on `[−s, s]`, `s = min(0.5, √(3/i))`, which keeps each
    /// layer's partial sums centred on zero.
    pub fn init_weights(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut self.layers {
            let s = (3.0 / layer.inputs() as f64).sqrt().min(0.5);
            layer.weights.mapv_inplace(|_| rng.random_range(-s..=s));
        }
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = self.input_dim;
        for (n, l) in self.layers.iter().enumerate() {
            let j = l.outputs();
            if l.inputs() != prev
                || [&l.bn_gamma, &l.bn_beta, &l.bn_running_mean, &l.bn_running_var]
                    .iter()
                    .any(|a| a.len() != j)
            {
                return Err(OnnError::Shape(format!("layer {n} does not chain from width {prev}")));
            }
            if l.weights.iter().any(|w| !(w.abs() <= 1.0 - CLAMP_EPS)) {
                return Err(OnnError::domain("weights", format!("layer {n} has entries outside the clamp")));
            }
            if l.bn_running_var.iter().any(|v| !(*v > 0.0)) {
                return Err(OnnError::domain("bn_running_var", format!("layer {n} has non-positive entries")));
            }
            prev = j;
        }
        Ok(())
    }

    fn check_batch(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(OnnError::Shape(format!(
                "batch has {} features, model expects {}",
                x.ncols(),
                self.input_dim
            )));
        }
        if let Some(v) = x.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(OnnError::domain("batch", format!("values must lie in [-1, 1] (got {v})")));
        }
        Ok(())
    }

    /// Logits for `x (k×input_dim)`. Training mode normalizes with batch
    /// statistics and returns a cache for [`OnnModel::backward`].
    pub fn forward(&self, x: ArrayView2<f64>, training: bool) -> Result<(Array2<f64>, Cache)> {
        self.check_batch(x)?;
        if training && x.nrows() < 2 {
            return Err(OnnError::Shape("batch-norm training needs at least 2 samples".into()));
        }
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (n, layer) in self.layers.iter().enumerate() {
            let z = nonlinear_layer(a.view(), layer.weights.view());
            let (out, lc) = if training {
                let k = z.nrows() as f64;
                let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                let centred = &z - &mean;
                let var = centred.mapv(|v| v * v).sum_axis(Axis(0)) / k;
                let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let xhat = centred * &inv_std;
                let out = &xhat * &layer.bn_gamma + &layer.bn_beta;
                (
                    out,
                    Some(LayerCache {
                        input: a,
                        mean,
                        var,
                        inv_std,
                        xhat,
                        post_bn: Array2::zeros((0, 0)),
                    }),
                )
            } else {
                let mut out = z;
                layer.bn_inference(&mut out);
                (out, None)
            };
            let next = if n < last { out.mapv(squash) } else { out.clone() };
            if let Some(mut lc) = lc {
                lc.post_bn = out;
                layers.push(lc);
            }
            a = next;
        }
        Ok((a, Cache { training, layers }))
    }

    /// Gradients of the mean softmax cross-entropy.
    pub fn backward(&self, cache: &Cache, labels: &[u8]) -> Result<Gradients> {
        if !cache.training || cache.layers.len() != self.layers.len() {
            return Err(OnnError::State("backward needs the cache of a training-mode forward".into()));
        }
        let last = self.layers.len() - 1;
        let logits = &cache.layers[last].post_bn;
        if labels.len() != logits.nrows() {
            return Err(OnnError::Shape(format!(
                "{} labels for a batch of {}",
                labels.len(),
                logits.nrows()
            )));
        }
        let k = logits.nrows() as f64;
        let mut d_out = softmax_rows(logits);
        for (mut row, &l) in d_out.rows_mut().into_iter().zip(labels) {
            row[l as usize] -= 1.0;
        }
        d_out /= k;

        let mut grads: Vec<LayerGrad> = Vec::with_capacity(self.layers.len());
        for n in (0..self.layers.len()).rev() {
            let layer = &self.layers[n];
            let lc = &cache.layers[n];
            if n < last {
                // Through SQUASH·tanh(post_bn).
                Zip::from(&mut d_out).and(&lc.post_bn).for_each(|d, &p| {
                    let t = p.tanh();
                    *d *= SQUASH * (1.0 - t * t);
                });
            }
            let d_gamma = (&d_out * &lc.xhat).sum_axis(Axis(0));
            let d_beta = d_out.sum_axis(Axis(0));
            let d_xhat = &d_out * &layer.bn_gamma;
            let mean_dx = d_xhat.mean_axis(Axis(0)).expect("non-empty batch");
            let mean_dx_xhat = (&d_xhat * &lc.xhat).mean_axis(Axis(0)).expect("non-empty batch");
            let d_z = (d_xhat - &mean_dx - &lc.xhat * &mean_dx_xhat) * &lc.inv_std;

            let x = &lc.input;
            let w = &layer.weights;
            let cx = x.mapv(|v| (1.0 - v * v).sqrt());
            let cw = w.mapv(|v| (1.0 - v * v).sqrt());
            // ∂Z/∂W_ij = √(1−x²) + x·w/√(1−w²)
            let ratio_w = Zip::from(w).and(&cw).map_collect(|&w, &c| w / c);
            let d_w = cx.t().dot(&d_z) + ratio_w * x.t().dot(&d_z);
            grads.push(LayerGrad {
                weights: d_w,
                bn_gamma: d_gamma,
                bn_beta: d_beta,
            });
            if n > 0 {
                // ∂Z/∂x_i = −x·w/√(1−x²) − √(1−w²)
                let ratio_x = Zip::from(x).and(&cx).map_collect(|&x, &c| x / c);
                d_out = -(ratio_x * d_z.dot(&w.t())) - d_z.dot(&cw.t());
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Folds the batch statistics of a training forward into the running
    /// estimates (unbiased variance).
    pub fn update_running_stats(&mut self, cache: &Cache) -> Result<()> {
        if !cache.training || cache.layers.len() != self.layers.len() {
            return Err(OnnError::State("running stats need a training-mode cache".into()));
        }
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            let k = lc.input.nrows() as f64;
            let m = layer.bn_momentum;
            let unbiased = &lc.var * (k / (k - 1.0));
            layer.bn_running_mean = &layer.bn_running_mean * (1.0 - m) + &lc.mean * m;
            layer.bn_running_var = &layer.bn_running_var * (1.0 - m) + unbiased * m;
        }
        Ok(())
    }

    /// Replaces every layer's running statistics with the exact population
    /// mean and unbiased variance over `x`, layer by layer with frozen
    /// weights. Momentum estimates lag badly when the pre-norm sums carry a
    /// large common offset, so training re-anchors them once per epoch.
    pub fn recalibrate_bn(&mut self, x: ArrayView2<f64>) -> Result<()> {
        self.check_batch(x)?;
        let k = x.nrows();
        if k < 2 {
            return Err(OnnError::Shape("recalibration needs at least 2 samples".into()));
        }
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (n, layer) in self.layers.iter_mut().enumerate() {
            let mut z = nonlinear_layer(a.view(), layer.weights.view());
            let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
            let var = (&z - &mean).mapv(|v| v * v).sum_axis(Axis(0)) / (k - 1) as f64;
            layer.bn_running_mean = mean;
            layer.bn_running_var = var;
            layer.bn_inference(&mut z);
            a = if n < last { z.mapv(squash) } else { z };
        }
        Ok(())
    }

    /// Plain gradient step followed by the weight clamp.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(OnnError::Shape("gradient/model layer count mismatch".into()));
        }
        let bound = 1.0 - CLAMP_EPS;
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            Zip::from(&mut layer.weights)
                .and(&g.weights)
                .for_each(|w, &d| *w = (*w - lr * d).clamp(-bound, bound));
            layer.bn_gamma.scaled_add(-lr, &g.bn_gamma);
            layer.bn_beta.scaled_add(-lr, &g.bn_beta);
        }
        Ok(())
    }

    /// Inference-mode predictions.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.forward(x, false)?.0))
    }
}

/// Per-layer values saved by a training forward.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Array2<f64>,
    pub mean: Array1<f64>,
    /// Biased batch variance.
    pub var: Array1<f64>,
    pub inv_std: Array1<f64>,
    pub xhat: Array2<f64>,
    pub post_bn: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct Cache {
    pub training: bool,
    pub layers: Vec<LayerCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bn_gamma: Array1<f64>,
    pub bn_beta: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &OnnModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.dim()),
                    bn_gamma: Array1::zeros(l.outputs()),
                    bn_beta: Array1::zeros(l.outputs()),
                })
                .collect(),
        }
    }
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

/// Mean softmax cross-entropy.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[u8]) -> f64 {
    let total: f64 = logits
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &l)| {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - row[l as usize]
        })
        .sum();
    total / labels.len() as f64
}

/// Index of the largest entry per row; ties go to the lowest index.
pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                .0
        })
        .collect()
}
