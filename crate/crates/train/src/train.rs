//! Mini-batch gradient descent with a step-decay learning rate.

use ndarray::{Array2, Axis};
use onn_core::{OnnError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mnist::Dataset;
use crate::model::{argmax_rows, cross_entropy, Gradients, OnnModel};

/// `lr(epoch) = initial · factor^(epoch / every)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub initial: f64,
    pub factor: f64,
    pub every: usize,
}

impl Default for StepDecay {
    fn default() -> Self {
        Self {
            initial: 0.02,
            factor: 0.5,
            every: 5,
        }
    }
}

impl StepDecay {
    pub fn rate(&self, epoch: usize) -> f64 {
        self.initial * self.factor.powi((epoch / self.every.max(1)) as i32)
    }
}

/// Update rule applied to each mini-batch gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    /// `w ← w − lr·g`.
    Sgd,
    /// Bias-corrected first and second moment estimates.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const ADAM: Optimizer = Optimizer::Adam {
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_schedule: StepDecay,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            lr_schedule: StepDecay::default(),
            optimizer: Optimizer::ADAM,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(OnnError::domain("batch_size", "must be >= 2 for batch norm"));
        }
        let s = &self.lr_schedule;
        if !(s.initial >= 0.0 && s.initial.is_finite()) {
            return Err(OnnError::domain("lr", "must be finite and >= 0"));
        }
        if !(s.factor > 0.0 && s.factor <= 1.0) {
            return Err(OnnError::domain("lr_factor", "must lie in (0, 1]"));
        }
        if s.every == 0 {
            return Err(OnnError::domain("lr_every", "must be >= 1"));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2)) {
                return Err(OnnError::domain("adam", "betas must lie in [0, 1)"));
            }
            if !(eps > 0.0) {
                return Err(OnnError::domain("adam", "eps must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    /// Inference-mode accuracy on the training set.
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainReport {
    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.test_accuracy)
    }
}

fn gather(data: &Dataset, idx: &[usize]) -> (Array2<f64>, Vec<u8>) {
    (
        data.images.select(Axis(0), idx),
        idx.iter().map(|&i| data.labels[i]).collect(),
    )
}

/// Running moments of every parameter for [`Optimizer::Adam`].
struct AdamState {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    fn new(model: &OnnModel, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            t: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    /// Turns a raw gradient into the step direction `m̂/(√v̂ + ε)`.
    fn direction(&mut self, mut g: Gradients) -> Gradients {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for ((gl, ml), vl) in g.layers.iter_mut().zip(&mut self.m.layers).zip(&mut self.v.layers) {
            let pairs = [
                (gl.weights.view_mut().into_dyn(), ml.weights.view_mut().into_dyn(), vl.weights.view_mut().into_dyn()),
                (gl.bn_gamma.view_mut().into_dyn(), ml.bn_gamma.view_mut().into_dyn(), vl.bn_gamma.view_mut().into_dyn()),
                (gl.bn_beta.view_mut().into_dyn(), ml.bn_beta.view_mut().into_dyn(), vl.bn_beta.view_mut().into_dyn()),
            ];
            for (mut g, mut m, mut v) in pairs {
                ndarray::Zip::from(&mut g).and(&mut m).and(&mut v).for_each(|g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * *g;
                    *v = b2 * *v + (1.0 - b2) * *g * *g;
                    *g = (*m / c1) / ((*v / c2).sqrt() + eps);
                });
            }
        }
        g
    }
}

/// Inference-mode accuracy.
pub fn evaluate(model: &OnnModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(OnnError::domain("dataset", "is empty"));
    }
    let mut correct = 0usize;
    for (chunk, labels) in data
        .images
        .axis_chunks_iter(Axis(0), 2048)
        .zip(data.labels.chunks(2048))
    {
        let pred = model.predict(chunk)?;
        correct += pred.iter().zip(labels).filter(|(p, l)| **p == **l as usize).count();
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Trains in place. Batches smaller than 2 at the end of an epoch are
/// skipped. `test` is scored after every epoch when given.
pub fn train(model: &mut OnnModel, data: &Dataset, cfg: &TrainConfig, test: Option<&Dataset>) -> Result<TrainReport> {
    cfg.validate()?;
    model.validate()?;
    if data.dim() != model.input_dim {
        return Err(OnnError::Shape(format!(
            "dataset has {} features, model expects {}",
            data.dim(),
            model.input_dim
        )));
    }
    if data.labels.iter().any(|&l| l as usize >= model.n_outputs()) {
        return Err(OnnError::domain("labels", "exceed the number of model outputs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport { epochs: Vec::new() };
    let mut adam = match cfg.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam { beta1, beta2, eps } => Some(AdamState::new(model, beta1, beta2, eps)),
    };
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_schedule.rate(epoch);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size).filter(|c| c.len() >= 2) {
            let (x, y) = gather(data, idx);
            let (logits, cache) = model.forward(x.view(), true)?;
            loss_sum += cross_entropy(&logits, &y);
            batches += 1;
            let mut grads = model.backward(&cache, &y)?;
            if let Some(a) = adam.as_mut() {
                grads = a.direction(grads);
            }
            model.update_running_stats(&cache)?;
            model.apply_gradients(&grads, lr)?;
        }
        if batches > 0 {
            model.recalibrate_bn(data.images.view())?;
        }
        let test_accuracy = test.map(|t| evaluate(model, t)).transpose()?;
        report.epochs.push(EpochMetrics {
            epoch: epoch + 1,
            lr,
            loss: loss_sum / batches.max(1) as f64,
            train_accuracy: evaluate(model, data)?,
            test_accuracy,
        });
    }
    Ok(report)
}

/// Accuracy of predicted classes against labels.
pub fn accuracy(logits: &Array2<f64>, labels: &[u8]) -> f64 {
    let pred = argmax_rows(logits);
    pred.iter().zip(labels).filter(|(p, l)| **p == **l as usize).count() as f64 / labels.len() as f64
}
