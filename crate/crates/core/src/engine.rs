//! Time-multiplexed optical matrix products.
//!
//! Input `i` of a vector is broadcast in time step `i` to all `j` receivers;
//! each receiver integrates its homodyne products over the `i` steps. `σ` is
//! the noise of one symbol relative to a unit product, so the integrated
//! value picks up one Gaussian draw of std `σ·√i` (independent noise per
//! step). An optional ADC then digitizes every receiver channel.
//!
//! Noise for output `(row, col)` comes from its own generator seeded from
//! `(rng_seed, row, col)`, so results do not depend on evaluation order.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, OnnError, Result};
use crate::noise::SnrResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Amplitude-encoded inputs, `x·w`.
    Linear,
    /// Phase-encoded inputs, `f_NL(x, w)`.
    Nonlinear,
}

/// How `σ` maps to the std of an integrated output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScaling {
    /// Independent noise in each of the `i` steps: `σ·√i`.
    #[default]
    PerSymbol,
    /// Noise proportional to the receiver full scale: `σ·Σ_i |contribution_ij|`.
    FullScale,
}

/// ADC input range.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdcRange {
    /// One range `±full_scale` for all channels; `None` auto-ranges to the
    /// largest `|y|` of the call.
    Symmetric { full_scale: Option<f64> },
    /// Each receiver channel auto-ranges to its own `[min, max]` over the
    /// call (per-channel offset and gain).
    #[default]
    PerChannel,
}

/// Engine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalMatVec {
    pub mode: Mode,
    /// Number of receivers `j`; must match the weight matrix width.
    pub fanout_j: usize,
    pub noise: Option<SnrResult>,
    pub noise_scaling: NoiseScaling,
    pub adc_bits: Option<u32>,
    pub adc_range: AdcRange,
    pub rng_seed: u64,
}

impl OpticalMatVec {
    /// A noiseless, unquantized engine.
    pub fn new(mode: Mode, fanout_j: usize) -> Result<Self> {
        let cfg = Self {
            mode,
            fanout_j,
            noise: None,
            noise_scaling: NoiseScaling::PerSymbol,
            adc_bits: None,
            adc_range: AdcRange::PerChannel,
            rng_seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_noise(mut self, noise: SnrResult) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_noise_scaling(mut self, scaling: NoiseScaling) -> Self {
        self.noise_scaling = scaling;
        self
    }

    pub fn with_adc(mut self, bits: u32, range: AdcRange) -> Result<Self> {
        self.adc_bits = Some(bits);
        self.adc_range = range;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.fanout_j == 0 {
            return Err(OnnError::domain("fanout_j", "must be >= 1"));
        }
        if let Some(bits) = self.adc_bits {
            if !(2..=16).contains(&bits) {
                return Err(OnnError::domain("adc_bits", format!("must lie in [2, 16] (got {bits})")));
            }
        }
        if let AdcRange::Symmetric { full_scale: Some(fs) } = self.adc_range {
            ensure_positive("full_scale", fs)?;
        }
        if let Some(n) = &self.noise {
            if !(n.sigma >= 0.0 && n.sigma.is_finite()) {
                return Err(OnnError::domain("noise.sigma", "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the noise substream for output `(row, col)`.
pub fn substream_seed(seed: u64, row: u64, col: u64) -> u64 {
    mix(mix(mix(seed) ^ row) ^ col.rotate_left(32))
}

fn gaussian(seed: u64, row: usize, col: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, row as u64, col as u64));
    StandardNormal.sample(&mut rng)
}

fn check_weights(w: ArrayView2<f64>, cfg: &OpticalMatVec) -> Result<()> {
    cfg.validate()?;
    if w.ncols() != cfg.fanout_j {
        return Err(OnnError::Shape(format!(
            "weight matrix has {} columns but fanout_j = {}",
            w.ncols(),
            cfg.fanout_j
        )));
    }
    if w.nrows() == 0 {
        return Err(OnnError::Shape("weight matrix has no rows".into()));
    }
    if let Some(v) = w.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(OnnError::domain("w", format!("entries must lie in [-1, 1] (got {v})")));
    }
    Ok(())
}

fn check_inputs(x: ArrayView2<f64>, mode: Mode) -> Result<()> {
    let bad = match mode {
        Mode::Linear => x.iter().find(|v| !v.is_finite()),
        Mode::Nonlinear => x.iter().find(|v| !(v.abs() <= 1.0)),
    };
    match bad {
        Some(v) => Err(OnnError::domain("x", format!("entry {v} out of range for {mode:?} mode"))),
        None => Ok(()),
    }
}

/// Clean integrated outputs and receiver full scales for one input row.
/// `cw` holds `√(1 − w²)` in nonlinear mode.
fn integrate(x: ArrayView1<f64>, w: ArrayView2<f64>, cw: Option<&Array2<f64>>) -> (Vec<f64>, Vec<f64>) {
    let j = w.ncols();
    let mut y = vec![0.0; j];
    let mut scale = vec![0.0; j];
    for (i, &xi) in x.iter().enumerate() {
        let wr = w.row(i);
        match cw {
            None => {
                for c in 0..j {
                    let v = xi * wr[c];
                    y[c] += v;
                    scale[c] += v.abs();
                }
            }
            Some(cw) => {
                let cx = (1.0 - xi * xi).sqrt();
                let cr = cw.row(i);
                for c in 0..j {
                    let v = wr[c] * cx - xi * cr[c];
                    y[c] += v;
                    scale[c] += v.abs();
                }
            }
        }
    }
    (y, scale)
}

/// Batched product `X (k×i) · W (i×j)`; row `r` equals `matvec(x_r)` with
/// noise substreams keyed by row index `r`.
pub fn matmul_batched(x: ArrayView2<f64>, w: ArrayView2<f64>, cfg: &OpticalMatVec) -> Result<Array2<f64>> {
    check_weights(w, cfg)?;
    if x.ncols() != w.nrows() {
        return Err(OnnError::Shape(format!(
            "input length {} does not match weight rows {}",
            x.ncols(),
            w.nrows()
        )));
    }
    check_inputs(x, cfg.mode)?;
    let cw = match cfg.mode {
        Mode::Linear => None,
        Mode::Nonlinear => Some(w.mapv(|v| (1.0 - v * v).sqrt())),
    };
    let j = w.ncols();
    let sqrt_i = (w.nrows() as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..x.nrows())
        .into_par_iter()
        .map(|r| {
            let (mut y, scale) = integrate(x.row(r), w, cw.as_ref());
            if let Some(n) = cfg.noise.as_ref().filter(|n| n.sigma > 0.0) {
                for c in 0..j {
                    let std = match cfg.noise_scaling {
                        NoiseScaling::PerSymbol => n.sigma * sqrt_i,
                        NoiseScaling::FullScale => n.sigma * scale[c],
                    };
                    y[c] += std * gaussian(cfg.rng_seed, r, c);
                }
            }
            y
        })
        .collect();
    let mut out = Array2::from_shape_vec((x.nrows(), j), rows.concat()).expect("row lengths equal j");
    if let Some(bits) = cfg.adc_bits {
        match cfg.adc_range {
            AdcRange::Symmetric { full_scale } => {
                let fs = full_scale.unwrap_or_else(|| out.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                if fs > 0.0 {
                    out.mapv_inplace(|v| quantize_unchecked(v, bits, fs));
                }
            }
            AdcRange::PerChannel => {
                for mut col in out.columns_mut() {
                    let lo = col.fold(f64::INFINITY, |m, &v| m.min(v));
                    let hi = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    if hi > lo {
                        col.mapv_inplace(|v| quantize_window_unchecked(v, bits, lo, hi));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Single vector product; same as row 0 of [`matmul_batched`].
pub fn matvec(x: ArrayView1<f64>, w: ArrayView2<f64>, cfg: &OpticalMatVec) -> Result<Vec<f64>> {
    let xm = x.insert_axis(Axis(0));
    Ok(matmul_batched(xm, w, cfg)?.into_raw_vec_and_offset().0)
}

fn quantize_unchecked(v: f64, bits: u32, full_scale: f64) -> f64 {
    let half = (1i64 << (bits - 1)) as f64;
    let step = full_scale / half;
    // Level index, so clamped and unclamped values hit identical levels.
    let n = (v / step).floor().clamp(-half, half - 1.0);
    (n + 0.5) * step
}

fn quantize_window_unchecked(v: f64, bits: u32, lo: f64, hi: f64) -> f64 {
    let levels = (1u64 << bits) as f64;
    let step = (hi - lo) / levels;
    let n = ((v - lo) / step).floor().clamp(0.0, levels - 1.0);
    lo + (n + 0.5) * step
}

/// Midrise uniform quantizer with `2^bits` levels spanning `[lo, hi]`.
pub fn quantize_window(v: f64, bits: u32, lo: f64, hi: f64) -> Result<f64> {
    if !(2..=16).contains(&bits) {
        return Err(OnnError::domain("bits", format!("must lie in [2, 16] (got {bits})")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(OnnError::domain("range", format!("need finite lo < hi (got [{lo}, {hi}])")));
    }
    if v.is_nan() {
        return Err(OnnError::domain("v", "is NaN"));
    }
    Ok(quantize_window_unchecked(v, bits, lo, hi))
}

/// Midrise uniform quantizer with `2^bits` levels spanning `±full_scale`.
pub fn quantize(v: f64, bits: u32, full_scale: f64) -> Result<f64> {
    if !(2..=16).contains(&bits) {
        return Err(OnnError::domain("bits", format!("must lie in [2, 16] (got {bits})")));
    }
    ensure_positive("full_scale", full_scale)?;
    if v.is_nan() {
        return Err(OnnError::domain("v", "is NaN"));
    }
    Ok(quantize_unchecked(v, bits, full_scale))
}

/// Effective bits of an SNR, `log2(snr)`.
pub fn precision_bits(snr: f64) -> Result<f64> {
    if !(snr > 1.0) {
        return Err(OnnError::domain("snr", format!("must be > 1 (got {snr})")));
    }
    Ok(snr.log2())
}

/// A VCSEL array and its emitted intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterGrid {
    pub rows: usize,
    pub cols: usize,
    pub pitch_um: f64,
    pub pattern: Array2<f64>,
}

impl EmitterGrid {
    pub fn new(pattern: Array2<f64>, pitch_um: f64) -> Result<Self> {
        ensure_positive("pitch_um", pitch_um)?;
        if pattern.is_empty() {
            return Err(OnnError::Shape("emitter pattern is empty".into()));
        }
        if let Some(v) = pattern.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(OnnError::domain("pattern", format!("intensities must be finite and >= 0 (got {v})")));
        }
        let (rows, cols) = pattern.dim();
        Ok(Self {
            rows,
            cols,
            pitch_um,
            pattern,
        })
    }

    /// All emitters at the same intensity.
    pub fn uniform(rows: usize, cols: usize, intensity: f64, pitch_um: f64) -> Result<Self> {
        Self::new(Array2::from_elem((rows, cols), intensity), pitch_um)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pattern.dim() != (self.rows, self.cols) {
            return Err(OnnError::Shape(format!(
                "pattern is {:?} but grid says {}x{}",
                self.pattern.dim(),
                self.rows,
                self.cols
            )));
        }
        Self::new(self.pattern.clone(), self.pitch_um).map(|_| ())
    }
}

/// Splitting weights of a diffractive fan-out element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoutMask {
    pub grid: Array2<f64>,
}

impl FanoutMask {
    pub fn new(grid: Array2<f64>) -> Result<Self> {
        if grid.is_empty() || grid.nrows() != grid.ncols() {
            return Err(OnnError::Shape(format!("mask must be square and non-empty (got {:?})", grid.dim())));
        }
        if let Some(v) = grid.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(OnnError::domain("mask", format!("weights must be finite and >= 0 (got {v})")));
        }
        let total: f64 = grid.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(OnnError::domain("mask", format!("weights must sum to 1 (got {total})")));
        }
        Ok(Self { grid })
    }

    /// An `m×m` splitter with equal power in every copy.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(OnnError::domain("m", "must be >= 1"));
        }
        Self::new(Array2::from_elem((m, m), 1.0 / (m * m) as f64))
    }

    pub fn size(&self) -> usize {
        self.grid.nrows()
    }
}

/// Full 2-D convolution, output `(r + m − 1) × (c + n − 1)`.
pub fn conv2d_full(a: ArrayView2<f64>, k: ArrayView2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (kr, kc) = k.dim();
    let mut out = Array2::zeros((ar + kr - 1, ac + kc - 1));
    for ((p, q), &av) in a.indexed_iter() {
        if av == 0.0 {
            continue;
        }
        for ((u, v), &kv) in k.indexed_iter() {
            out[[p + u, q + v]] += av * kv;
        }
    }
    out
}

/// Intensity on the receiver plane: every emitter replicated by the mask.
pub fn fanout_image(array: &EmitterGrid, mask: &FanoutMask) -> Result<Array2<f64>> {
    array.validate()?;
    Ok(conv2d_full(array.pattern.view(), mask.grid.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonics::nonlinear_product;
    use approx::assert_relative_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..=1.0))
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
        Array1::from_shape_fn(n, |_| rng.random_range(-1.0..=1.0))
    }

    fn dense(x: &Array1<f64>, w: &Array2<f64>) -> Vec<f64> {
        (0..w.ncols())
            .map(|c| (0..w.nrows()).map(|i| x[i] * w[[i, c]]).sum())
            .collect()
    }

    fn nonlinear_oracle(x: &Array1<f64>, w: &Array2<f64>) -> Vec<f64> {
        (0..w.ncols())
            .map(|c| (0..w.nrows()).map(|i| nonlinear_product(x[i], w[[i, c]]).unwrap()).sum())
            .collect()
    }

    fn close(a: &[f64], b: &[f64], rel: f64) {
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(b) {
            assert!((p - q).abs() <= rel * q.abs().max(1.0), "{p} vs {q}");
        }
    }

    #[test]
    fn basis_extracts_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_matrix(&mut rng, 6, 4);
        let cfg = OpticalMatVec::new(Mode::Linear, 4).unwrap();
        for k in 0..6 {
            let mut x = Array1::zeros(6);
            x[k] = 1.0;
            let y = matvec(x.view(), w.view(), &cfg).unwrap();
            assert_eq!(y, w.row(k).to_vec());
        }
    }

    #[test]
    fn oracle_16x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_matrix(&mut rng, 16, 8);
        let x = random_vec(&mut rng, 16);
        let lin = OpticalMatVec::new(Mode::Linear, 8).unwrap();
        close(&matvec(x.view(), w.view(), &lin).unwrap(), &dense(&x, &w), 1e-9);
        let nl = OpticalMatVec::new(Mode::Nonlinear, 8).unwrap();
        close(&matvec(x.view(), w.view(), &nl).unwrap(), &nonlinear_oracle(&x, &w), 1e-9);
    }

    #[test]
    fn oracle_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let i = rng.random_range(1..=64);
            let j = rng.random_range(1..=32);
            let w = random_matrix(&mut rng, i, j);
            let x = random_vec(&mut rng, i);
            let lin = OpticalMatVec::new(Mode::Linear, j).unwrap();
            close(&matvec(x.view(), w.view(), &lin).unwrap(), &dense(&x, &w), 1e-9);
            let nl = OpticalMatVec::new(Mode::Nonlinear, j).unwrap();
            close(&matvec(x.view(), w.view(), &nl).unwrap(), &nonlinear_oracle(&x, &w), 1e-9);
        }
    }

    #[test]
    fn batched_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_matrix(&mut rng, 16, 8);
        let lin = OpticalMatVec::new(Mode::Linear, 8).unwrap();
        let eye = Array2::<f64>::eye(16);
        let y = matmul_batched(eye.view(), w.view(), &lin).unwrap();
        assert!(y.iter().zip(w.iter()).all(|(a, b)| (a - b).abs() <= 1e-9));

        let x = random_matrix(&mut rng, 5, 16);
        let y = matmul_batched(x.view(), w.view(), &lin).unwrap();
        let oracle = x.dot(&w);
        assert!(y.iter().zip(oracle.iter()).all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0)));

        let noisy = lin.clone().with_noise(SnrResult::from_snr(50.0).unwrap()).with_seed(9);
        let one = matmul_batched(x.slice(ndarray::s![0..1, ..]), w.view(), &noisy).unwrap();
        let v = matvec(x.row(0), w.view(), &noisy).unwrap();
        assert_eq!(one.row(0).to_vec(), v);
    }

    #[test]
    fn errors() {
        let w = Array2::<f64>::zeros((4, 3));
        let cfg = OpticalMatVec::new(Mode::Nonlinear, 3).unwrap();
        let x = Array1::<f64>::zeros(5);
        assert!(matches!(matvec(x.view(), w.view(), &cfg), Err(OnnError::Shape(_))));
        let x = array![0.0, 0.0, 1.5, 0.0];
        assert!(matches!(matvec(x.view(), w.view(), &cfg), Err(OnnError::Domain { .. })));
        let lin = OpticalMatVec::new(Mode::Linear, 3).unwrap();
        assert!(matvec(x.view(), w.view(), &lin).is_ok());
        let mut w2 = w.clone();
        w2[[0, 0]] = -1.2;
        assert!(matvec(x.view(), w2.view(), &lin).is_err());
        let cfg4 = OpticalMatVec::new(Mode::Linear, 4).unwrap();
        assert!(matches!(matvec(x.view(), w.view(), &cfg4), Err(OnnError::Shape(_))));
        assert!(OpticalMatVec::new(Mode::Linear, 0).is_err());
        assert!(lin.clone().with_adc(1, AdcRange::PerChannel).is_err());
        assert!(lin.clone().with_adc(17, AdcRange::PerChannel).is_err());
        assert!(lin.clone().with_adc(6, AdcRange::Symmetric { full_scale: Some(0.0) }).is_err());
    }

    #[test]
    fn noise_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (i, j) = (32, 8);
        let w = random_matrix(&mut rng, i, j);
        let x = random_vec(&mut rng, i);
        let sigma = 0.01;
        for mode in [Mode::Linear, Mode::Nonlinear] {
            let clean_cfg = OpticalMatVec::new(mode, j).unwrap();
            let clean = matvec(x.view(), w.view(), &clean_cfg).unwrap();
            let scale: Vec<f64> = (0..j)
                .map(|c| {
                    (0..i)
                        .map(|r| match mode {
                            Mode::Linear => (x[r] * w[[r, c]]).abs(),
                            Mode::Nonlinear => nonlinear_product(x[r], w[[r, c]]).unwrap().abs(),
                        })
                        .sum()
                })
                .collect();
            let reps = 10_000;
            let batch = Array2::from_shape_fn((reps, i), |(_, c)| x[c]);
            for scaling in [NoiseScaling::PerSymbol, NoiseScaling::FullScale] {
                let noisy_cfg = clean_cfg
                    .clone()
                    .with_noise(SnrResult::from_sigma(sigma).unwrap())
                    .with_noise_scaling(scaling)
                    .with_seed(77);
                let y = matmul_batched(batch.view(), w.view(), &noisy_cfg).unwrap();
                for c in 0..j {
                    let d: Vec<f64> = y.column(c).iter().map(|v| v - clean[c]).collect();
                    let mean = d.iter().sum::<f64>() / reps as f64;
                    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
                    let want = match scaling {
                        NoiseScaling::PerSymbol => sigma * (i as f64).sqrt(),
                        NoiseScaling::FullScale => sigma * scale[c],
                    };
                    assert!((var.sqrt() / want - 1.0).abs() < 0.03, "{mode:?} col {c}: {} vs {want}", var.sqrt());
                }
            }
        }
    }

    #[test]
    fn determinism_and_order_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_matrix(&mut rng, 20, 10);
        let x = random_matrix(&mut rng, 37, 20);
        let cfg = OpticalMatVec::new(Mode::Nonlinear, 10)
            .unwrap()
            .with_noise(SnrResult::from_snr(30.0).unwrap())
            .with_seed(1234);
        let a = matmul_batched(x.view(), w.view(), &cfg).unwrap();
        let b = matmul_batched(x.view(), w.view(), &cfg).unwrap();
        assert_eq!(a, b);
        // Each output's noise is the draw of its own (seed, row, col) substream.
        let std = 20f64.sqrt() / 30.0;
        for r in 0..x.nrows() {
            let xr = x.row(r).to_owned();
            let clean = nonlinear_oracle(&xr, &w);
            for c in 0..10 {
                let g = (a[[r, c]] - clean[c]) / std;
                assert!((g - gaussian(1234, r, c)).abs() <= 1e-9);
            }
        }
        let other = matmul_batched(x.view(), w.view(), &cfg.clone().with_seed(1235)).unwrap();
        assert_ne!(a, other);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| matmul_batched(x.view(), w.view(), &cfg).unwrap());
        assert_eq!(a, serial);
    }

    #[test]
    fn substreams_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..4 {
            for r in 0..50 {
                for c in 0..50 {
                    assert!(seen.insert(substream_seed(s, r, c)));
                }
            }
        }
    }

    #[test]
    fn adc_auto_ranging_and_override() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = random_matrix(&mut rng, 16, 8);
        let x = random_matrix(&mut rng, 10, 16);
        let clean = matmul_batched(x.view(), w.view(), &OpticalMatVec::new(Mode::Linear, 8).unwrap()).unwrap();
        let fs = clean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cfg = OpticalMatVec::new(Mode::Linear, 8)
            .unwrap()
            .with_adc(6, AdcRange::Symmetric { full_scale: None })
            .unwrap();
        let q = matmul_batched(x.view(), w.view(), &cfg).unwrap();
        let step = 2.0 * fs / 64.0;
        for (a, b) in q.iter().zip(clean.iter()) {
            assert!((a - b).abs() <= 0.5 * step + 1e-12);
            assert_eq!(quantize(*a, 6, fs).unwrap(), *a);
        }
        let fixed = OpticalMatVec::new(Mode::Linear, 8)
            .unwrap()
            .with_adc(4, AdcRange::Symmetric { full_scale: Some(0.5) })
            .unwrap();
        let q = matmul_batched(x.view(), w.view(), &fixed).unwrap();
        assert!(q.iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn adc_per_channel_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_matrix(&mut rng, 16, 5);
        let x = random_matrix(&mut rng, 40, 16);
        let lin = OpticalMatVec::new(Mode::Linear, 5).unwrap();
        let clean = matmul_batched(x.view(), w.view(), &lin).unwrap();
        let q = matmul_batched(x.view(), w.view(), &lin.with_adc(5, AdcRange::PerChannel).unwrap()).unwrap();
        for c in 0..5 {
            let col = clean.column(c);
            let lo = col.fold(f64::INFINITY, |m, &v| m.min(v));
            let hi = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let step = (hi - lo) / 32.0;
            for (a, b) in q.column(c).iter().zip(col) {
                assert!((a - b).abs() <= 0.5 * step + 1e-12);
                assert!(*a > lo && *a < hi);
                assert_eq!(quantize_window(*a, 5, lo, hi).unwrap(), *a);
            }
        }
        // A channel offset far above its spread keeps its resolution.
        let offset = Array2::from_shape_fn((40, 16), |(r, _)| 0.5 + 0.01 * (r as f64 / 40.0));
        let ones = Array2::from_elem((16, 1), 1.0);
        let lin1 = OpticalMatVec::new(Mode::Linear, 1).unwrap();
        let clean = matmul_batched(offset.view(), ones.view(), &lin1).unwrap();
        let win = matmul_batched(offset.view(), ones.view(), &lin1.clone().with_adc(6, AdcRange::PerChannel).unwrap())
            .unwrap();
        let sym = matmul_batched(
            offset.view(),
            ones.view(),
            &lin1.with_adc(6, AdcRange::Symmetric { full_scale: None }).unwrap(),
        )
        .unwrap();
        let err = |q: &Array2<f64>| q.iter().zip(clean.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err(&win) < err(&sym) / 10.0);
        assert!(quantize_window(0.0, 6, 1.0, 1.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert!(quantize(0.0, 6, 1.0).unwrap().abs() <= 1.0 / 64.0);
        let top = quantize(5.0, 6, 1.0).unwrap();
        let bottom = quantize(-5.0, 6, 1.0).unwrap();
        assert_relative_eq!(top, 1.0 - 1.0 / 64.0);
        assert_relative_eq!(bottom, -top);
        assert_eq!(quantize(1.0, 6, 1.0).unwrap(), top);
        assert!(quantize(0.1, 1, 1.0).is_err());
        assert!(quantize(0.1, 6, 0.0).is_err());
    }

    #[test]
    fn quantization_noise_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let fs = 2.5;
        let n = 1_000_000;
        let mse: f64 = (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(-fs..fs);
                (quantize(v, 6, fs).unwrap() - v).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        // Uniform error over one step Δ = 2·fs/2^6 has RMS Δ/√12 = fs·2^−6/√3.
        let want = fs * 2f64.powi(-6) / 3f64.sqrt();
        assert!((mse.sqrt() / want - 1.0).abs() < 0.05);
    }

    #[test]
    fn precision_bits_examples() {
        assert_relative_eq!(precision_bits(100.0).unwrap(), 6.643_856, max_relative = 1e-6);
        assert_eq!(precision_bits(2.0).unwrap(), 1.0);
        assert_relative_eq!(precision_bits(135.0).unwrap(), 7.076_816, max_relative = 1e-6);
        assert!(precision_bits(1.0).is_err());
    }

    /// Gather form: out[r, c] = Σ_{a,b} A[a, b]·M[r − a, c − b].
    fn conv_gather(a: &Array2<f64>, m: &Array2<f64>) -> Array2<f64> {
        let (ar, ac) = a.dim();
        let (mr, mc) = m.dim();
        Array2::from_shape_fn((ar + mr - 1, ac + mc - 1), |(r, c)| {
            let mut s = 0.0;
            for p in 0..ar {
                for q in 0..ac {
                    if r >= p && c >= q && r - p < mr && c - q < mc {
                        s += a[[p, q]] * m[[r - p, c - q]];
                    }
                }
            }
            s
        })
    }

    #[test]
    fn fanout_examples() {
        let mask = FanoutMask::uniform(9).unwrap();
        let single = EmitterGrid::new(array![[3.0]], 80.0).unwrap();
        let img = fanout_image(&single, &mask).unwrap();
        assert_eq!(img, mask.grid.mapv(|v| 3.0 * v));

        let grid = EmitterGrid::uniform(5, 5, 1.0, 80.0).unwrap();
        let img = fanout_image(&grid, &mask).unwrap();
        assert_eq!(img.dim(), (13, 13));
        assert_eq!(img, conv_gather(&grid.pattern, &mask.grid));

        let id = FanoutMask::new(array![[1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pat = Array2::from_shape_fn((4, 6), |_| rng.random_range(0.0..2.0));
        let g = EmitterGrid::new(pat.clone(), 80.0).unwrap();
        assert_eq!(fanout_image(&g, &id).unwrap(), pat);
    }

    #[test]
    fn mask_and_grid_validation() {
        assert!(FanoutMask::new(array![[0.5, 0.4], [0.05, 0.0]]).is_err());
        assert!(FanoutMask::new(array![[0.5, 0.5]]).is_err());
        assert!(FanoutMask::new(array![[1.5, -0.5], [0.0, 0.0]]).is_err());
        assert_relative_eq!(FanoutMask::uniform(9).unwrap().grid.sum(), 1.0, max_relative = 1e-12);
        assert!(EmitterGrid::new(array![[1.0, -0.1]], 80.0).is_err());
        assert!(EmitterGrid::new(array![[1.0]], 0.0).is_err());
        let mut g = EmitterGrid::uniform(2, 2, 1.0, 80.0).unwrap();
        g.rows = 3;
        assert!(fanout_image(&g, &FanoutMask::uniform(3).unwrap()).is_err());
    }

    fn pattern(r: usize, c: usize) -> impl Strategy<Value = Array2<f64>> {
        proptest::collection::vec(0.0f64..10.0, r * c).prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
    }

    fn mask(m: usize) -> impl Strategy<Value = FanoutMask> {
        proptest::collection::vec(0.01f64..1.0, m * m).prop_map(move |v| {
            let s: f64 = v.iter().sum();
            FanoutMask::new(Array2::from_shape_vec((m, m), v.iter().map(|x| x / s).collect()).unwrap()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fanout_matches_gather_oracle(
            (a, m) in (1usize..7, 1usize..7, 1usize..6).prop_flat_map(|(r, c, m)| (pattern(r, c), mask(m)))
        ) {
            let g = EmitterGrid::new(a.clone(), 80.0).unwrap();
            prop_assert_eq!(fanout_image(&g, &m).unwrap(), conv_gather(&a, &m.grid));
        }

        #[test]
        fn fanout_is_linear_and_conserves_energy(
            (a, b, m) in (1usize..6, 1usize..6, 1usize..5)
                .prop_flat_map(|(r, c, m)| (pattern(r, c), pattern(r, c), mask(m)))
        ) {
            let ga = EmitterGrid::new(a.clone(), 80.0).unwrap();
            let gb = EmitterGrid::new(b.clone(), 80.0).unwrap();
            let gab = EmitterGrid::new(&a + &b, 80.0).unwrap();
            let sum = fanout_image(&ga, &m).unwrap() + fanout_image(&gb, &m).unwrap();
            let joint = fanout_image(&gab, &m).unwrap();
            for (p, q) in joint.iter().zip(sum.iter()) {
                prop_assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0));
            }
            let total = joint.sum();
            prop_assert!((total - (&a + &b).sum()).abs() <= 1e-12 * total.max(1.0));
        }

        #[test]
        fn quantize_is_idempotent_and_bounded(v in -10.0f64..10.0, bits in 2u32..=16, fs in 0.01f64..5.0) {
            let q = quantize(v, bits, fs).unwrap();
            prop_assert_eq!(quantize(q, bits, fs).unwrap(), q);
            prop_assert!(q.abs() < fs);
            if v.abs() < fs {
                prop_assert!((q - v).abs() <= fs / (1u64 << bits) as f64 * (1.0 + 1e-9));
            }
        }
    }
}
