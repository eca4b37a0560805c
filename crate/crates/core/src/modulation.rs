//! Local-oscillator data modulation and demodulation.
//!
//! Each symbol is mixed onto a carrier `sin(ω_LO·t)` running at twice the
//! symbol rate, so every slot integrates to zero and slow thermal drifts of
//! the injection-locked VCSELs decouple from the data. The homodyne product
//! of two phase-encoded mixed symbols is not separable in the LO; demodulating
//! it by correlation with the LO recovers `f_NL` up to a small residual that
//! grows with the operand amplitudes.
//!
//! Samples sit at slot-midpoint times `t_k = t0 + (k + ½)/f_s`.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, OnnError, Result};
use crate::photonics::fnl;

/// LO and sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoConfig {
    /// Symbol rate, symbols/s.
    pub data_rate: f64,
    /// LO frequency ω_LO/2π in Hz.
    pub lo_freq: f64,
    /// Waveform samples per symbol slot (even, ≥ 16).
    pub samples_per_symbol: usize,
    /// Phase offset of the demodulation reference, radians.
    pub lo_phase: f64,
}

impl Default for LoConfig {
    fn default() -> Self {
        Self::new(1e9, 64).expect("default LO configuration is valid")
    }
}

impl LoConfig {
    /// LO at twice the data rate, aligned with the drive.
    pub fn new(data_rate: f64, samples_per_symbol: usize) -> Result<Self> {
        let cfg = Self {
            data_rate,
            lo_freq: 2.0 * data_rate,
            samples_per_symbol,
            lo_phase: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_lo_freq(self, lo_freq: f64) -> Result<Self> {
        let cfg = Self { lo_freq, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_lo_phase(self, lo_phase: f64) -> Result<Self> {
        if !lo_phase.is_finite() {
            return Err(OnnError::domain("lo_phase", "must be finite"));
        }
        Ok(Self { lo_phase, ..self })
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("data_rate", self.data_rate)?;
        ensure_positive("lo_freq", self.lo_freq)?;
        if self.samples_per_symbol < 16 || self.samples_per_symbol % 2 != 0 {
            return Err(OnnError::domain(
                "samples_per_symbol",
                format!("must be even and >= 16 (got {})", self.samples_per_symbol),
            ));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.data_rate * self.samples_per_symbol as f64
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.lo_freq
    }
}

/// A uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<f64>,
    /// Hz.
    pub sample_rate: f64,
    /// Start of the first slot, seconds.
    pub t0: f64,
}

impl Waveform {
    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `a·self + b·other` on a shared time axis.
    pub fn combine(&self, a: f64, other: &Waveform, b: f64) -> Result<Waveform> {
        if self.len() != other.len()
            || self.sample_rate != other.sample_rate
            || self.t0 != other.t0
        {
            return Err(OnnError::Shape("waveforms do not share a time axis".into()));
        }
        Ok(Waveform {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            sample_rate: self.sample_rate,
            t0: self.t0,
        })
    }

    /// Two-column CSV `time_s,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "value"])?;
        for (k, v) in self.samples.iter().enumerate() {
            w.write_record([self.time(k).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_values(field: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(OnnError::domain(field, "needs at least one symbol"));
    }
    match values.iter().find(|v| !(v.abs() <= 1.0)) {
        Some(v) => Err(OnnError::domain(field, format!("values must lie in [-1, 1] (got {v})"))),
        None => Ok(()),
    }
}

fn check_pairs(x_vals: &[f64], w_vals: &[f64]) -> Result<()> {
    if x_vals.len() != w_vals.len() {
        return Err(OnnError::Shape(format!(
            "x has {} symbols but w has {}",
            x_vals.len(),
            w_vals.len()
        )));
    }
    check_values("x_vals", x_vals)?;
    check_values("w_vals", w_vals)
}

/// Builds a waveform by evaluating `f(symbol, lo)` at every sample, where
/// `lo = sin(ω_LO·t)`.
fn synthesize(n_symbols: usize, cfg: &LoConfig, f: impl Fn(usize, f64) -> f64) -> Waveform {
    let l = cfg.samples_per_symbol;
    let fs = cfg.sample_rate();
    let omega = cfg.omega();
    let samples = (0..n_symbols * l)
        .map(|k| {
            let t = (k as f64 + 0.5) / fs;
            f(k / l, (omega * t).sin())
        })
        .collect();
    Waveform {
        samples,
        sample_rate: fs,
        t0: 0.0,
    }
}

/// Mixes each symbol onto the LO: `values[k]·sin(ω_LO·t)` in slot `k`.
pub fn modulate(values: &[f64], cfg: &LoConfig) -> Result<Waveform> {
    cfg.validate()?;
    check_values("values", values)?;
    Ok(synthesize(values.len(), cfg, |k, lo| values[k] * lo))
}

/// Homodyne signal of two LO-mixed, phase-encoded symbol streams:
/// `W·s·√(1 − X²s²) − X·s·√(1 − W²s²)` with `s = sin(ω_LO·t)`.
pub fn homodyne_waveform(x_vals: &[f64], w_vals: &[f64], cfg: &LoConfig) -> Result<Waveform> {
    cfg.validate()?;
    check_pairs(x_vals, w_vals)?;
    Ok(synthesize(x_vals.len(), cfg, |k, s| {
        let (x, w) = (x_vals[k], w_vals[k]);
        w * s * (1.0 - x * x * s * s).max(0.0).sqrt() - x * s * (1.0 - w * w * s * s).max(0.0).sqrt()
    }))
}

/// The separable ideal `f_NL(X, W)·sin(ω_LO·t)`.
pub fn reference_waveform(x_vals: &[f64], w_vals: &[f64], cfg: &LoConfig) -> Result<Waveform> {
    cfg.validate()?;
    check_pairs(x_vals, w_vals)?;
    Ok(synthesize(x_vals.len(), cfg, |k, s| fnl(x_vals[k], w_vals[k]) * s))
}

/// Per-slot correlation with the LO, `(2/L)·Σ samples·sin(ω_LO·t + φ_LO)`.
pub fn demodulate(wf: &Waveform, cfg: &LoConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let l = cfg.samples_per_symbol;
    if wf.is_empty() || wf.len() % l != 0 {
        return Err(OnnError::Length(format!(
            "{} samples is not a whole number of {l}-sample slots",
            wf.len()
        )));
    }
    let fs = cfg.sample_rate();
    if ((wf.sample_rate - fs) / fs).abs() > 1e-12 {
        return Err(OnnError::domain(
            "sample_rate",
            format!("waveform is sampled at {} Hz, LO config expects {fs} Hz", wf.sample_rate),
        ));
    }
    let omega = cfg.omega();
    let norm = 2.0 / l as f64;
    Ok(wf
        .samples
        .chunks(l)
        .enumerate()
        .map(|(slot, chunk)| {
            let base = slot * l;
            norm * chunk
                .iter()
                .enumerate()
                .map(|(k, v)| v * (omega * wf.time(base + k) + cfg.lo_phase).sin())
                .sum::<f64>()
        })
        .collect())
}

/// How random operand pairs are drawn for a residual study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairDistribution {
    /// Independent uniform draws on [−1, 1].
    Uniform,
    /// Independent normal draws, each vector scaled so its largest magnitude
    /// is exactly 1 (a drive whose peak-to-peak swing equals V_π).
    Gaussian,
}

/// Draws `n` (x, w) pairs from the given law.
pub fn random_pairs(n: usize, dist: PairDistribution, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(OnnError::domain("n", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> {
        match dist {
            PairDistribution::Uniform => {
                let u = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
                (0..n).map(|_| u.sample(&mut rng)).collect()
            }
            PairDistribution::Gaussian => {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                v.into_iter().map(|x| (x / peak).clamp(-1.0, 1.0)).collect()
            }
        }
    };
    let x = draw();
    let w = draw();
    Ok((x, w))
}

/// Demodulation error against the ideal product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub n: usize,
    pub rms: f64,
    pub max_abs: f64,
}

/// Simulates every pair through the homodyne waveform and the demodulator
/// and compares with `f_NL`.
pub fn residual_study(x_vals: &[f64], w_vals: &[f64], cfg: &LoConfig) -> Result<ResidualStats> {
    let wf = homodyne_waveform(x_vals, w_vals, cfg)?;
    let demod = demodulate(&wf, cfg)?;
    let (mut sq, mut max_abs) = (0.0, 0.0f64);
    for ((d, &x), &w) in demod.iter().zip(x_vals).zip(w_vals) {
        let r = d - fnl(x, w);
        sq += r * r;
        max_abs = max_abs.max(r.abs());
    }
    Ok(ResidualStats {
        n: demod.len(),
        rms: (sq / demod.len() as f64).sqrt(),
        max_abs,
    })
}
