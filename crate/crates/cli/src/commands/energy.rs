//! `energy`: per-component ledger, density and the hardware comparison.

use clap::Args;
use onn_core::energy::{
    comparison_report, comparison_text, full_budget, optical_energy, EnergyPreset, SystemParams,
};
use onn_core::photonics::VcselParams;
use serde::{Deserialize, Serialize};

use crate::config::{overlay, preset_name, set, write_effective, CliError, Global};
use crate::output::{write_records, write_text};
use crate::Outcome;

#[derive(Debug, Clone, Default, Args)]
pub struct EnergyArgs {
    /// now or future.
    #[arg(long)]
    pub preset: Option<String>,
    /// Also print the compute density.
    #[arg(long)]
    pub density: bool,
    #[arg(long)]
    pub v_bias: Option<f64>,
    #[arg(long)]
    pub i_bias: Option<f64>,
    #[arg(long)]
    pub v_pi: Option<f64>,
    #[arg(long)]
    pub p_optical: Option<f64>,
    #[arg(long)]
    pub p_inj: Option<f64>,
    #[arg(long)]
    pub clock_rate: Option<f64>,
    #[arg(long)]
    pub fanout_j: Option<u64>,
    #[arg(long)]
    pub integration_i: Option<u64>,
    #[arg(long)]
    pub device_area_mm2: Option<f64>,
    #[arg(long)]
    pub e_adc: Option<f64>,
    #[arg(long)]
    pub e_tia: Option<f64>,
    #[arg(long)]
    pub e_int: Option<f64>,
    #[arg(long)]
    pub e_dac: Option<f64>,
    #[arg(long)]
    pub e_mem: Option<f64>,
    /// Count the nonlinear-activation row in the total.
    #[arg(long)]
    pub include_nl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub preset: String,
    pub v_bias: f64,
    pub i_bias: f64,
    pub v_pi: f64,
    pub p_optical: f64,
    pub p_inj: f64,
    pub clock_rate: f64,
    pub fanout_j: u64,
    pub integration_i: u64,
    pub device_area_mm2: f64,
    pub e_adc: f64,
    pub e_tia: f64,
    pub e_int: f64,
    pub e_dac: f64,
    pub e_mem: f64,
    pub include_nl_in_total: bool,
}

impl EnergyParams {
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let preset = match name.to_ascii_lowercase().as_str() {
            "now" => EnergyPreset::Now,
            "future" => EnergyPreset::Future,
            _ => return Err(CliError::params(format!("unknown preset `{name}` (now, future)"))),
        };
        let s = preset.params();
        Ok(Self {
            preset: name.to_string(),
            v_bias: s.vcsel.v_bias,
            i_bias: s.vcsel.i_bias,
            v_pi: s.vcsel.v_pi,
            p_optical: s.vcsel.p_optical,
            p_inj: s.p_inj,
            clock_rate: s.clock_rate,
            fanout_j: s.fanout_j,
            integration_i: s.integration_i,
            device_area_mm2: s.device_area_mm2,
            e_adc: s.e_adc,
            e_tia: s.e_tia,
            e_int: s.e_int,
            e_dac: s.e_dac,
            e_mem: s.e_mem,
            include_nl_in_total: s.include_nl_in_total,
        })
    }

    pub fn system(&self) -> Result<SystemParams, CliError> {
        let base = VcselParams::fabricated();
        let vcsel = VcselParams::new(
            self.v_bias,
            self.i_bias,
            self.v_pi,
            self.p_optical,
            base.bandwidth_hz,
            base.q_factor,
        )?;
        let s = SystemParams {
            vcsel,
            p_inj: self.p_inj,
            clock_rate: self.clock_rate,
            fanout_j: self.fanout_j,
            integration_i: self.integration_i,
            device_area_mm2: self.device_area_mm2,
            e_adc: self.e_adc,
            e_tia: self.e_tia,
            e_int: self.e_int,
            e_dac: self.e_dac,
            e_mem: self.e_mem,
            include_nl_in_total: self.include_nl_in_total,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub preset: String,
    pub total_per_op_j: f64,
    pub optical_per_op_j: f64,
    pub optical_per_symbol_j: f64,
    pub p_mod_w: f64,
    pub compute_density_op_per_mm2_s: f64,
    pub efficiency_tops_per_j: f64,
    pub optical_efficiency_tops_per_j: f64,
}

pub fn resolve(args: &EnergyArgs, file: Option<&toml::Table>) -> Result<EnergyParams, CliError> {
    let name = preset_name(args.preset.as_deref(), file, "now")?;
    let mut p = overlay(&EnergyParams::from_preset(&name)?, file)?;
    p.preset = name;
    set(&mut p.v_bias, args.v_bias);
    set(&mut p.i_bias, args.i_bias);
    set(&mut p.v_pi, args.v_pi);
    set(&mut p.p_optical, args.p_optical);
    set(&mut p.p_inj, args.p_inj);
    set(&mut p.clock_rate, args.clock_rate);
    set(&mut p.fanout_j, args.fanout_j);
    set(&mut p.integration_i, args.integration_i);
    set(&mut p.device_area_mm2, args.device_area_mm2);
    set(&mut p.e_adc, args.e_adc);
    set(&mut p.e_tia, args.e_tia);
    set(&mut p.e_int, args.e_int);
    set(&mut p.e_dac, args.e_dac);
    set(&mut p.e_mem, args.e_mem);
    if args.include_nl {
        p.include_nl_in_total = true;
    }
    Ok(p)
}

pub fn run(args: &EnergyArgs, file: Option<&toml::Table>, global: &Global) -> Result<Outcome, CliError> {
    let p = resolve(args, file)?;
    let sys = p.system()?;
    let budget = full_budget(&sys)?;
    let opt = optical_energy(&sys)?;
    let summary = EnergySummary {
        preset: p.preset.clone(),
        total_per_op_j: budget.total_per_op,
        optical_per_op_j: budget.optical_per_op,
        optical_per_symbol_j: opt.per_symbol,
        p_mod_w: opt.p_mod,
        compute_density_op_per_mm2_s: budget.compute_density,
        efficiency_tops_per_j: budget.efficiency_tops_per_joule(),
        optical_efficiency_tops_per_j: budget.optical_efficiency_tops_per_joule(),
    };
    let comparison = comparison_report(&budget);
    write_records(global, "energy_budget", &budget.per_component)?;
    write_records(global, "energy_summary", std::slice::from_ref(&summary))?;
    write_records(global, "comparison", &comparison)?;
    write_text(
        global,
        "energy_report.txt",
        &format!("{}\n{}", budget.text_report(), comparison_text(&comparison)),
    )?;
    write_effective(global, "energy", &p)?;
    let mut line = format!(
        "energy {}: total {:.4e} J/OP, optical {:.4e} J/OP ({:.4e} J/symbol)",
        p.preset, summary.total_per_op_j, summary.optical_per_op_j, summary.optical_per_symbol_j
    );
    if args.density {
        line.push_str(&format!(
            ", density {:.4} TeraOP/(mm^2 s)",
            summary.compute_density_op_per_mm2_s / 1e12
        ));
    }
    Ok(Outcome {
        summary: serde_json::to_value(&summary).expect("serializable"),
        line,
    })
}
