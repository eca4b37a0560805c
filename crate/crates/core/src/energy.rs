//! Energy and compute-density accounting.
//!
//! One multiply-accumulate is two operations. Symbol-rate costs (laser,
//! DAC, memory) are shared by the `j` fan-out copies; readout costs (ADC,
//! TIA, integrator) fire once per `i`-step integration.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, OnnError, Result};
use crate::photonics::VcselParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub vcsel: VcselParams,
    /// Injection-lock power per VCSEL, W.
    pub p_inj: f64,
    /// Symbol rate R, symbols/s.
    pub clock_rate: f64,
    pub fanout_j: u64,
    pub integration_i: u64,
    /// Area per transmitter, mm².
    pub device_area_mm2: f64,
    pub e_adc: f64,
    pub e_tia: f64,
    pub e_int: f64,
    pub e_dac: f64,
    pub e_mem: f64,
    #[serde(default)]
    pub include_nl_in_total: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyPreset {
    /// The demonstrated 1 GS/s system with 9×9 fan-out.
    Now,
    /// 25 GS/s, 32×32 fan-out, low-voltage DAC.
    Future,
}

impl EnergyPreset {
    pub fn params(self) -> SystemParams {
        match self {
            EnergyPreset::Now => SystemParams {
                vcsel: VcselParams::fabricated(),
                p_inj: 1e-6,
                clock_rate: 1e9,
                fanout_j: 81,
                integration_i: 784,
                device_area_mm2: 0.08 * 0.08,
                e_adc: 1e-12,
                e_tia: 1e-12,
                e_int: 1e-15,
                e_dac: 0.5e-12,
                e_mem: wire_energy(200e-15, 1.0),
                include_nl_in_total: false,
            },
            EnergyPreset::Future => SystemParams {
                // 40 µW electrical in, 10 µW optical out.
                vcsel: VcselParams::new(1.3, 40e-6 / 1.3, 4e-3, 10e-6, 2e9, 1e5)
                    .expect("static parameters are valid"),
                p_inj: 1e-6,
                clock_rate: 25e9,
                fanout_j: 1024,
                integration_i: 1_000_000,
                device_area_mm2: 0.08 * 0.08,
                e_adc: 1e-12,
                e_tia: 1e-12,
                e_int: 1e-15,
                e_dac: wire_energy(200e-15, 4e-3),
                e_mem: wire_energy(200e-15, 1.0),
                include_nl_in_total: false,
            },
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.vcsel.validate()?;
        ensure_non_negative("p_inj", self.p_inj)?;
        ensure_positive("clock_rate", self.clock_rate)?;
        ensure_positive("device_area_mm2", self.device_area_mm2)?;
        if self.fanout_j == 0 {
            return Err(OnnError::domain("fanout_j", "must be >= 1"));
        }
        if self.integration_i == 0 {
            return Err(OnnError::domain("integration_i", "must be >= 1"));
        }
        ensure_non_negative("e_adc", self.e_adc)?;
        ensure_non_negative("e_tia", self.e_tia)?;
        ensure_non_negative("e_int", self.e_int)?;
        ensure_non_negative("e_dac", self.e_dac)?;
        ensure_non_negative("e_mem", self.e_mem)
    }
}

/// Energy stored on a wire, `C·V²/2`.
pub fn wire_energy(capacitance_f: f64, voltage_v: f64) -> f64 {
    0.5 * capacitance_f * voltage_v * voltage_v
}

/// Electrical power terms behind the optical energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalEnergy {
    /// Laser bias power `P_b`, W.
    pub p_bias: f64,
    /// Electrical cost of the injection light, `P_inj/ξ`, W.
    pub p_inj_electrical: f64,
    /// Modulation power `P_m`, W.
    pub p_mod: f64,
    /// J/symbol.
    pub per_symbol: f64,
    /// J/OP.
    pub per_op: f64,
}

pub fn optical_energy(sys: &SystemParams) -> Result<OpticalEnergy> {
    sys.validate()?;
    let p_bias = sys.vcsel.bias_power();
    let p_inj_electrical = sys.p_inj / sys.vcsel.wall_plug;
    let p_mod = sys.vcsel.modulation_power();
    let per_symbol = (p_bias + p_inj_electrical + p_mod) / sys.clock_rate;
    Ok(OpticalEnergy {
        p_bias,
        p_inj_electrical,
        p_mod,
        per_symbol,
        per_op: per_symbol / (2.0 * sys.fanout_j as f64),
    })
}

/// `(P_b + P_inj/ξ + P_m) / (2·j·R)` in J/OP.
pub fn optical_energy_per_op(sys: &SystemParams) -> Result<f64> {
    Ok(optical_energy(sys)?.per_op)
}

/// `ρ = 2·j·R/a` in OP/(mm²·s).
pub fn compute_density(sys: &SystemParams) -> Result<f64> {
    sys.validate()?;
    Ok(2.0 * sys.fanout_j as f64 * sys.clock_rate / sys.device_area_mm2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub name: String,
    /// J per use (per symbol for the optical rows).
    pub energy_per_use: f64,
    pub divisor: f64,
    /// Human-readable divisor, e.g. `2j=162`.
    pub divisor_label: String,
    pub energy_per_op: f64,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub per_component: Vec<BudgetRow>,
    pub total_per_op: f64,
    pub optical_per_op: f64,
    pub compute_density: f64,
}

impl EnergyBudget {
    /// TeraOP/J of the full system.
    pub fn efficiency_tops_per_joule(&self) -> f64 {
        1e-12 / self.total_per_op
    }

    pub fn optical_efficiency_tops_per_joule(&self) -> f64 {
        1e-12 / self.optical_per_op
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["component", "energy_per_use_j", "divisor", "energy_per_op_j", "included"])?;
        for r in &self.per_component {
            w.write_record([
                r.name.clone(),
                r.energy_per_use.to_string(),
                r.divisor.to_string(),
                r.energy_per_op.to_string(),
                r.included.to_string(),
            ])?;
        }
        w.write_record(["total", "", "", &self.total_per_op.to_string(), "true"])?;
        w.flush()?;
        Ok(())
    }

    /// Aligned text table: component, value, fan-out, energy/OP.
    pub fn text_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>14} {:>14} {:>12}", "component", "value", "fan-out", "energy/OP");
        for r in &self.per_component {
            let (use_unit, op) = if r.name.starts_with("optical") || r.name.starts_with("nonlinear") {
                ("J/symbol", si(r.energy_per_op, "J"))
            } else {
                ("J/use", si(r.energy_per_op, "J"))
            };
            let op = if r.included { op } else { format!("({op})") };
            let _ = writeln!(
                s,
                "{:<24} {:>14} {:>14} {:>12}",
                r.name,
                si(r.energy_per_use, use_unit),
                r.divisor_label,
                op
            );
        }
        let _ = writeln!(s, "{:<24} {:>14} {:>14} {:>12}", "total", "", "", si(self.total_per_op, "J"));
        let _ = writeln!(
            s,
            "compute density {:.3} TeraOP/(mm^2 s); efficiency {:.1} TeraOP/J (optical {:.1})",
            self.compute_density / 1e12,
            self.efficiency_tops_per_joule(),
            self.optical_efficiency_tops_per_joule()
        );
        s
    }
}

/// Formats a value with an SI prefix, e.g. `2.43 fJ`.
pub fn si(v: f64, unit: &str) -> String {
    const PREFIXES: [(f64, &str); 9] = [
        (1e3, "k"),
        (1.0, ""),
        (1e-3, "m"),
        (1e-6, "u"),
        (1e-9, "n"),
        (1e-12, "p"),
        (1e-15, "f"),
        (1e-18, "a"),
        (1e-21, "z"),
    ];
    if v == 0.0 {
        return format!("0 {unit}");
    }
    let (scale, p) = PREFIXES
        .iter()
        .find(|(s, _)| v.abs() >= *s)
        .copied()
        .unwrap_or((1e-21, "z"));
    format!("{:.3} {p}{unit}", v / scale)
}

pub fn full_budget(sys: &SystemParams) -> Result<EnergyBudget> {
    let opt = optical_energy(sys)?;
    let two_j = 2.0 * sys.fanout_j as f64;
    let two_i = 2.0 * sys.integration_i as f64;
    let lj = format!("2j={}", 2 * sys.fanout_j);
    let li = format!("2i={}", 2 * sys.integration_i);
    let row = |name: &str, e: f64, d: f64, label: &str, included: bool| BudgetRow {
        name: name.to_string(),
        energy_per_use: e,
        divisor: d,
        divisor_label: label.to_string(),
        energy_per_op: e / d,
        included,
    };
    let per_component = vec![
        row("optical", opt.per_symbol, two_j, &lj, true),
        // Reuses the optical power; listed for completeness.
        row("nonlinear activation", opt.per_symbol, two_j, &lj, sys.include_nl_in_total),
        row("adc", sys.e_adc, two_i, &li, true),
        row("integrator", sys.e_int, two_i, &li, true),
        row("tia", sys.e_tia, two_i, &li, true),
        row("dac", sys.e_dac, two_j, &lj, true),
        row("memory", sys.e_mem, two_j, &lj, true),
    ];
    let total_per_op = per_component.iter().filter(|r| r.included).map(|r| r.energy_per_op).sum();
    Ok(EnergyBudget {
        optical_per_op: per_component[0].energy_per_op,
        total_per_op,
        compute_density: compute_density(sys)?,
        per_component,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub category: String,
    pub hardware: String,
    /// TeraOP/(mm²·s).
    pub density: f64,
    /// TeraOP/J.
    pub efficiency: f64,
    pub comment: String,
}

/// Published reference points: (category, hardware, density, efficiency, comment).
pub const REFERENCE_HARDWARE: [(&str, &str, f64, f64, &str); 9] = [
    ("digital", "Google TPU", 0.28, 0.4, ""),
    ("digital", "NVIDIA A100", 0.35, 0.72, ""),
    ("digital", "Graphcore IPU2", 0.17, 1.0, ""),
    ("optical", "Photonic tensor core", 1.2, 0.4, "optical energy"),
    ("optical", "Photonic deep neural network", 3.5, 2.9, "optical performance"),
    ("optical", "Photonic deep neural network", 0.03, 0.07, "full-system performance"),
    ("optical", "VCSEL ONN (now)", 25.0, 140.0, "full-system performance"),
    ("optical", "VCSEL ONN (now)", 25.0, 400.0, "optical performance"),
    ("optical", "VCSEL ONN (future)", 8000.0, 20000.0, "full-system performance"),
];

/// Reference rows followed by the computed system (full and optical-only).
pub fn comparison_report(budget: &EnergyBudget) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = REFERENCE_HARDWARE
        .iter()
        .map(|&(c, h, d, e, m)| ComparisonRow {
            category: c.into(),
            hardware: h.into(),
            density: d,
            efficiency: e,
            comment: m.into(),
        })
        .collect();
    let density = budget.compute_density / 1e12;
    rows.push(ComparisonRow {
        category: "computed".into(),
        hardware: "this configuration".into(),
        density,
        efficiency: budget.efficiency_tops_per_joule(),
        comment: "full-system performance".into(),
    });
    rows.push(ComparisonRow {
        category: "computed".into(),
        hardware: "this configuration".into(),
        density,
        efficiency: budget.optical_efficiency_tops_per_joule(),
        comment: "optical performance".into(),
    });
    rows
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<30} {:>16} {:>14}  {}",
        "category", "hardware", "TeraOP/(mm^2 s)", "TeraOP/J", "comment"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<10} {:<30} {:>16.3} {:>14.3}  {}",
            r.category, r.hardware, r.density, r.efficiency, r.comment
        );
    }
    s
}
