//! `modulate`: LO modulation and demodulation residual against `f_NL`.

use clap::Args;
use onn_core::modulation::{demodulate, homodyne_waveform, random_pairs, LoConfig, PairDistribution};
use onn_core::photonics::nonlinear_product;
use serde::{Deserialize, Serialize};

use crate::config::{overlay, set, write_effective, CliError, Global};
use crate::output::write_records;
use crate::Outcome;

/// Symbols of the first pairs kept in the waveform table.
const WAVEFORM_SYMBOLS: usize = 16;

#[derive(Debug, Clone, Default, Args)]
pub struct ModulateArgs {
    /// Number of pairs.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fixed input value for every pair instead of random draws.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Fixed weight value for every pair instead of random draws.
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    /// gaussian or uniform.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub samples_per_symbol: Option<usize>,
    /// Symbol rate in symbols/s.
    #[arg(long)]
    pub data_rate: Option<f64>,
    /// LO frequency in Hz (default twice the data rate).
    #[arg(long)]
    pub lo_freq: Option<f64>,
    /// Reference phase offset in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub lo_phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulateParams {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    pub dist: PairDistribution,
    pub samples_per_symbol: usize,
    pub data_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_freq: Option<f64>,
    pub lo_phase: f64,
}

impl Default for ModulateParams {
    fn default() -> Self {
        let lo = LoConfig::default();
        Self {
            n: 10_000,
            x: None,
            w: None,
            dist: PairDistribution::Gaussian,
            samples_per_symbol: lo.samples_per_symbol,
            data_rate: lo.data_rate,
            lo_freq: None,
            lo_phase: lo.lo_phase,
        }
    }
}

impl ModulateParams {
    pub fn lo(&self) -> Result<LoConfig, CliError> {
        let mut cfg = LoConfig::new(self.data_rate, self.samples_per_symbol)?;
        if let Some(f) = self.lo_freq {
            cfg = cfg.with_lo_freq(f)?;
        }
        Ok(cfg.with_lo_phase(self.lo_phase)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulateSummary {
    pub n: usize,
    pub dist: String,
    pub samples_per_symbol: usize,
    pub rms_residual: f64,
    pub max_abs_residual: f64,
}

#[derive(Debug, Serialize)]
struct PairRecord {
    x: f64,
    w: f64,
    demodulated: f64,
    f_nl: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct Sample {
    time_s: f64,
    value: f64,
}

pub fn parse_dist(s: &str) -> Result<PairDistribution, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "gaussian" => Ok(PairDistribution::Gaussian),
        "uniform" => Ok(PairDistribution::Uniform),
        _ => Err(CliError::params(format!("dist must be gaussian or uniform (got `{s}`)"))),
    }
}

pub fn resolve(args: &ModulateArgs, file: Option<&toml::Table>) -> Result<ModulateParams, CliError> {
    let mut p = overlay(&ModulateParams::default(), file)?;
    set(&mut p.n, args.n);
    if args.x.is_some() {
        p.x = args.x;
    }
    if args.w.is_some() {
        p.w = args.w;
    }
    if let Some(d) = &args.dist {
        p.dist = parse_dist(d)?;
    }
    set(&mut p.samples_per_symbol, args.samples_per_symbol);
    set(&mut p.data_rate, args.data_rate);
    if args.lo_freq.is_some() {
        p.lo_freq = args.lo_freq;
    }
    set(&mut p.lo_phase, args.lo_phase);
    if p.n == 0 {
        return Err(CliError::params("n must be >= 1"));
    }
    for (name, v) in [("x", p.x), ("w", p.w)] {
        if let Some(v) = v {
            if !(-1.0..=1.0).contains(&v) {
                return Err(CliError::params(format!("{name} must lie in [-1, 1] (got {v})")));
            }
        }
    }
    Ok(p)
}

/// Random pairs from the seed, with `x` and/or `w` pinned when given.
pub fn pairs(p: &ModulateParams, seed: u64) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (mut x, mut w) = random_pairs(p.n, p.dist, seed)?;
    if let Some(v) = p.x {
        x.fill(v);
    }
    if let Some(v) = p.w {
        w.fill(v);
    }
    Ok((x, w))
}

pub fn run(args: &ModulateArgs, file: Option<&toml::Table>, global: &Global) -> Result<Outcome, CliError> {
    let p = resolve(args, file)?;
    let lo = p.lo()?;
    let (x, w) = pairs(&p, global.seed)?;
    let wf = homodyne_waveform(&x, &w, &lo)?;
    let demod = demodulate(&wf, &lo)?;
    let mut records = Vec::with_capacity(p.n);
    let (mut sq, mut max_abs) = (0.0, 0.0f64);
    for ((&xv, &wv), &d) in x.iter().zip(&w).zip(&demod) {
        let f = nonlinear_product(xv, wv)?;
        let r = d - f;
        sq += r * r;
        max_abs = max_abs.max(r.abs());
        records.push(PairRecord {
            x: xv,
            w: wv,
            demodulated: d,
            f_nl: f,
            residual: r,
        });
    }
    let summary = ModulateSummary {
        n: p.n,
        dist: match p.dist {
            PairDistribution::Gaussian => "gaussian".into(),
            PairDistribution::Uniform => "uniform".into(),
        },
        samples_per_symbol: p.samples_per_symbol,
        rms_residual: (sq / p.n as f64).sqrt(),
        max_abs_residual: max_abs,
    };
    let keep = WAVEFORM_SYMBOLS.min(p.n) * p.samples_per_symbol;
    let samples: Vec<Sample> = (0..keep)
        .map(|k| Sample {
            time_s: wf.time(k),
            value: wf.samples[k],
        })
        .collect();
    write_records(global, "modulate_summary", std::slice::from_ref(&summary))?;
    write_records(global, "modulate_pairs", &records)?;
    write_records(global, "modulate_waveform", &samples)?;
    write_effective(global, "modulate", &p)?;
    let line = format!(
        "modulate: {} {} pairs, rms residual {:.3}% (max {:.3}%)",
        p.n,
        summary.dist,
        100.0 * summary.rms_residual,
        100.0 * summary.max_abs_residual
    );
    Ok(Outcome {
        summary: serde_json::to_value(&summary).expect("serializable"),
        line,
    })
}
