//! `snr`: receiver SNR at an operating point plus a power sweep.

use clap::Args;
use onn_core::engine::precision_bits;
use onn_core::noise::{
    energy_per_op, log_spaced, photons_per_op, power_for_photons, sigma_integrating, snr_sweep, NoiseParams,
    ReceiverConfig, SnrPreset,
};
use serde::{Deserialize, Serialize};

use crate::config::{overlay, preset_name, set, write_effective, CliError, Global};
use crate::output::write_records;
use crate::Outcome;

#[derive(Debug, Clone, Default, Args)]
pub struct SnrArgs {
    /// figS2, figS3a or figS3b.
    #[arg(long)]
    pub preset: Option<String>,
    /// Input power P_i in W.
    #[arg(long)]
    pub p_input: Option<f64>,
    /// Set P_i from photons per OP instead.
    #[arg(long)]
    pub photons: Option<f64>,
    /// NEP in W/√Hz.
    #[arg(long)]
    pub nep: Option<f64>,
    /// RIN in dBc/Hz.
    #[arg(long, allow_hyphen_values = true)]
    pub rin_db: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Optical frequency in Hz.
    #[arg(long)]
    pub nu: Option<f64>,
    /// 1 = balanced, 2 = single detector.
    #[arg(long)]
    pub b: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Symbol rate in symbols/s.
    #[arg(long)]
    pub clock_rate: Option<f64>,
    /// Symbols integrated per readout.
    #[arg(long)]
    pub integration_steps: Option<u64>,
    #[arg(long)]
    pub sweep_min: Option<f64>,
    #[arg(long)]
    pub sweep_max: Option<f64>,
    #[arg(long)]
    pub sweep_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrParams {
    pub preset: String,
    pub nep: f64,
    pub rin_db: f64,
    pub eta: f64,
    pub nu: f64,
    pub b: u32,
    pub gamma: f64,
    pub clock_rate: f64,
    pub integration_steps: u64,
    pub p_input: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photons: Option<f64>,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
}

pub fn parse_preset(name: &str) -> Result<SnrPreset, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "figs2" => Ok(SnrPreset::FigS2),
        "figs3a" => Ok(SnrPreset::FigS3a),
        "figs3b" => Ok(SnrPreset::FigS3b),
        _ => Err(CliError::params(format!("unknown preset `{name}` (figS2, figS3a, figS3b)"))),
    }
}

impl SnrParams {
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let s = parse_preset(name)?.scenario();
        Ok(Self {
            preset: name.to_string(),
            nep: s.noise.nep,
            rin_db: s.noise.rin_db,
            eta: s.noise.eta,
            nu: s.noise.nu,
            b: s.noise.b,
            gamma: s.noise.gamma,
            clock_rate: s.rx.clock_rate,
            integration_steps: s.rx.integration_steps,
            p_input: s.rx.p_input,
            photons: None,
            sweep_min: 1e-10,
            sweep_max: 1e-4,
            sweep_points: 61,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSummary {
    pub preset: String,
    pub p_input_w: f64,
    pub photons_per_op: f64,
    pub energy_per_op_j: f64,
    pub sigma: f64,
    pub snr: f64,
    pub bits: f64,
    pub frac_thermal: f64,
    pub frac_shot: f64,
    pub frac_rin: f64,
    pub dominant: String,
}

pub fn resolve(args: &SnrArgs, file: Option<&toml::Table>) -> Result<SnrParams, CliError> {
    let name = preset_name(args.preset.as_deref(), file, "figS2")?;
    let mut p = overlay(&SnrParams::from_preset(&name)?, file)?;
    p.preset = name;
    set(&mut p.p_input, args.p_input);
    if args.p_input.is_some() {
        p.photons = None;
    }
    if args.photons.is_some() {
        p.photons = args.photons;
    }
    set(&mut p.nep, args.nep);
    set(&mut p.rin_db, args.rin_db);
    set(&mut p.eta, args.eta);
    set(&mut p.nu, args.nu);
    set(&mut p.b, args.b);
    set(&mut p.gamma, args.gamma);
    set(&mut p.clock_rate, args.clock_rate);
    set(&mut p.integration_steps, args.integration_steps);
    set(&mut p.sweep_min, args.sweep_min);
    set(&mut p.sweep_max, args.sweep_max);
    set(&mut p.sweep_points, args.sweep_points);
    Ok(p)
}

/// Computes the summary and the sweep for resolved parameters.
pub fn evaluate(p: &SnrParams) -> Result<(SnrSummary, Vec<onn_core::noise::SweepRow>), CliError> {
    let noise = NoiseParams {
        nep: p.nep,
        rin_db: p.rin_db,
        eta: p.eta,
        nu: p.nu,
        b: p.b,
        gamma: p.gamma,
    };
    noise.validate()?;
    let p_input = match p.photons {
        Some(n) => {
            if !(n > 0.0 && n.is_finite()) {
                return Err(CliError::params(format!("`photons` must be > 0 (got {n})")));
            }
            power_for_photons(n, &ReceiverConfig::new(p.clock_rate, p.integration_steps, 1.0)?, p.nu)
        }
        None => p.p_input,
    };
    let rx = ReceiverConfig::new(p.clock_rate, p.integration_steps, p_input)?;
    let r = sigma_integrating(&noise, &rx)?;
    let n = photons_per_op(p_input, &rx, p.nu);
    let summary = SnrSummary {
        preset: p.preset.clone(),
        p_input_w: p_input,
        photons_per_op: n,
        energy_per_op_j: energy_per_op(n, p.nu),
        sigma: r.sigma,
        snr: r.snr,
        bits: precision_bits(r.snr).unwrap_or(0.0),
        frac_thermal: r.noise_terms.thermal,
        frac_shot: r.noise_terms.shot,
        frac_rin: r.noise_terms.rin,
        dominant: r.noise_terms.dominant().to_string(),
    };
    let sweep = snr_sweep(&noise, &rx, &log_spaced(p.sweep_min, p.sweep_max, p.sweep_points)?)?;
    Ok((summary, sweep))
}

pub fn run(args: &SnrArgs, file: Option<&toml::Table>, global: &Global) -> Result<Outcome, CliError> {
    let p = resolve(args, file)?;
    let (summary, sweep) = evaluate(&p)?;
    write_records(global, "snr_sweep", &sweep)?;
    write_records(global, "snr_summary", std::slice::from_ref(&summary))?;
    write_effective(global, "snr", &p)?;
    let line = format!(
        "snr {}: P_i = {:.4e} W, {:.4} photons/OP, SNR = {:.2} ({:.2} bits), dominant {} noise",
        summary.preset, summary.p_input_w, summary.photons_per_op, summary.snr, summary.bits, summary.dominant
    );
    Ok(Outcome {
        summary: serde_json::to_value(&summary).expect("serializable"),
        line,
    })
}
