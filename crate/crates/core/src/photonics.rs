//! Optical field algebra of the homodyne compute unit.
//!
//! Two injection-locked VCSELs share one carrier. Their fields meet on a
//! beamsplitter that delays the reflected beam by π/2, and the two output
//! ports are detected. With balanced detection the DC terms cancel and the
//! differential current carries `A_X·A_W·sin(φ_W − φ_X)`.
//!
//! All detector outputs here are dimensionless: the proportionality between
//! photocurrent and field product is fixed to 1. Responsivity, gain and noise
//! live in [`crate::noise`].
//!
//! Encodings:
//! - linear mode: input in the amplitude (`A_X = |x|`, sign folded into a
//!   π phase flip), weight in the phase (`sin φ_W = w`);
//! - nonlinear mode: both operands in the phase (`sin φ_X = x`,
//!   `sin φ_W = w`), which yields `w·√(1−x²) − x·√(1−w²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, OnnError, Result};

/// Carrier frequency of the 976 nm VCSELs, ν = 307.5 THz.
pub const DEFAULT_CARRIER_HZ: f64 = 307.5e12;

/// Locking range at the calibration point (1 µW injected → 1.7 GHz).
pub const LOCK_RANGE_AT_1UW_HZ: f64 = 1.7e9;

/// Square-root-law coefficient κ in Hz/√W, pinned by the calibration point.
pub const DEFAULT_LOCK_KAPPA: f64 = LOCK_RANGE_AT_1UW_HZ / 1.0e-3; // √(1e-6 W) = 1e-3

const FREQ_REL_TOL: f64 = 1e-12;

/// Wraps an angle into (−π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Complex field of one emitter at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserField {
    /// Normalized field amplitude, never negative.
    pub amplitude: f64,
    /// Phase in (−π, π].
    pub phase: f64,
    /// Carrier frequency ω/2π in Hz.
    pub frequency: f64,
}

impl LaserField {
    pub fn new(amplitude: f64, phase: f64, frequency: f64) -> Result<Self> {
        ensure_non_negative("amplitude", amplitude)?;
        if !phase.is_finite() {
            return Err(OnnError::domain("phase", "must be finite"));
        }
        ensure_positive("frequency", frequency)?;
        Ok(Self {
            amplitude,
            phase: wrap_phase(phase),
            frequency,
        })
    }

    /// Amplitude-encodes a signed value: the magnitude goes into the
    /// amplitude and a negative sign becomes an extra π of phase.
    pub fn signed(value: f64, phase: f64, frequency: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(OnnError::domain("value", "must be finite"));
        }
        let flip = if value.is_sign_negative() && value != 0.0 {
            PI
        } else {
            0.0
        };
        Self::new(value.abs(), phase + flip, frequency)
    }

    /// Unit-amplitude field whose phase satisfies `sin φ = value`.
    pub fn phase_encoded(value: f64, frequency: f64) -> Result<Self> {
        check_unit_interval("value", value)?;
        Self::new(1.0, value.asin(), frequency)
    }
}

fn check_same_carrier(x: &LaserField, w: &LaserField) -> Result<()> {
    let scale = x.frequency.abs().max(w.frequency.abs());
    if (x.frequency - w.frequency).abs() > FREQ_REL_TOL * scale {
        return Err(OnnError::domain(
            "frequency",
            format!(
                "fields must share one carrier (got {} Hz and {} Hz)",
                x.frequency, w.frequency
            ),
        ));
    }
    Ok(())
}

fn check_unit_interval(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v.abs() <= 1.0 {
        Ok(())
    } else {
        Err(OnnError::domain(field, format!("must lie in [-1, 1] (got {v})")))
    }
}

fn check_open_unit_interval(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v.abs() < 1.0 {
        Ok(())
    } else {
        Err(OnnError::domain(
            field,
            format!("must lie in (-1, 1), derivative is singular at the boundary (got {v})"),
        ))
    }
}

/// Balanced homodyne output `A_X·A_W·sin(φ_W − φ_X)`.
///
/// This is the port difference `I⁺ − I⁻` divided by 4 (the interference term
/// appears with a factor 2 in each port, with opposite signs).
pub fn balanced_homodyne(x: &LaserField, w: &LaserField) -> Result<f64> {
    check_same_carrier(x, w)?;
    Ok(x.amplitude * w.amplitude * (w.phase - x.phase).sin())
}

/// Photocurrents `(I⁺, I⁻)` on the two beamsplitter output ports.
pub fn single_port_currents(x: &LaserField, w: &LaserField) -> Result<(f64, f64)> {
    check_same_carrier(x, w)?;
    let dc = x.amplitude * x.amplitude + w.amplitude * w.amplitude;
    let interference = 2.0 * x.amplitude * w.amplitude * (w.phase - x.phase).sin();
    Ok((dc + interference, dc - interference))
}

/// Linear-mode product `x·w`, formed as a homodyne measurement.
pub fn linear_product(x_val: f64, w_val: f64) -> Result<f64> {
    check_unit_interval("w_val", w_val)?;
    let x = LaserField::signed(x_val, 0.0, DEFAULT_CARRIER_HZ)?;
    let w = LaserField::new(1.0, w_val.asin(), DEFAULT_CARRIER_HZ)?;
    balanced_homodyne(&x, &w)
}

/// The native nonlinear weighting `f_NL = w·√(1−x²) − x·√(1−w²)`.
pub fn nonlinear_product(x_val: f64, w_val: f64) -> Result<f64> {
    check_unit_interval("x_val", x_val)?;
    check_unit_interval("w_val", w_val)?;
    Ok(fnl(x_val, w_val))
}

/// Unchecked `f_NL`; callers guarantee `|x|, |w| ≤ 1`.
#[inline]
pub(crate) fn fnl(x: f64, w: f64) -> f64 {
    w * (1.0 - x * x).sqrt() - x * (1.0 - w * w).sqrt()
}

/// Single-detector readout of the nonlinear mode: `I⁺` including its DC
/// terms, `2 + 2·f_NL` for unit amplitudes.
pub fn nonlinear_single_port(x_val: f64, w_val: f64) -> Result<f64> {
    let x = LaserField::phase_encoded(x_val, DEFAULT_CARRIER_HZ)?;
    let w = LaserField::phase_encoded(w_val, DEFAULT_CARRIER_HZ)?;
    Ok(single_port_currents(&x, &w)?.0)
}

/// Analytic gradient `(∂f/∂x, ∂f/∂w)` of [`nonlinear_product`].
pub fn nonlinear_product_grad(x_val: f64, w_val: f64) -> Result<(f64, f64)> {
    check_open_unit_interval("x_val", x_val)?;
    check_open_unit_interval("w_val", w_val)?;
    let cx = (1.0 - x_val * x_val).sqrt();
    let cw = (1.0 - w_val * w_val).sqrt();
    Ok((-w_val * x_val / cx - cw, cx + x_val * w_val / cw))
}

/// Second derivative `∂²f/∂x² = −w·(1−x²)^(−3/2)`.
pub fn nonlinear_curvature(x_val: f64, w_val: f64) -> Result<f64> {
    check_open_unit_interval("x_val", x_val)?;
    check_unit_interval("w_val", w_val)?;
    Ok(-w_val * (1.0 - x_val * x_val).powf(-1.5))
}

/// Electrical and optical operating point of one VCSEL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcselParams {
    pub v_bias: f64,
    pub i_bias: f64,
    /// Peak-to-peak drive that spans a π phase shift.
    pub v_pi: f64,
    /// Emitted optical power in watts.
    pub p_optical: f64,
    /// Wall-plug efficiency ξ = P_optical / (V_b·I_b).
    pub wall_plug: f64,
    pub bandwidth_hz: f64,
    pub q_factor: f64,
}

impl VcselParams {
    /// Builds a parameter set, deriving the wall-plug efficiency.
    pub fn new(
        v_bias: f64,
        i_bias: f64,
        v_pi: f64,
        p_optical: f64,
        bandwidth_hz: f64,
        q_factor: f64,
    ) -> Result<Self> {
        let p = Self {
            v_bias,
            i_bias,
            v_pi,
            p_optical,
            wall_plug: p_optical / (v_bias * i_bias),
            bandwidth_hz,
            q_factor,
        };
        p.validate()?;
        Ok(p)
    }

    /// The fabricated device: 1.3 V, 300 µA, V_π = 4 mV, 100 µW,
    /// 2 GHz bandwidth, Q = 10⁵.
    pub fn fabricated() -> Self {
        Self::new(1.3, 300e-6, 4e-3, 100e-6, 2e9, 1e5).expect("static parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("v_bias", self.v_bias)?;
        ensure_positive("i_bias", self.i_bias)?;
        ensure_positive("v_pi", self.v_pi)?;
        ensure_positive("p_optical", self.p_optical)?;
        ensure_positive("wall_plug", self.wall_plug)?;
        ensure_positive("bandwidth_hz", self.bandwidth_hz)?;
        ensure_positive("q_factor", self.q_factor)?;
        let expected = self.p_optical / (self.v_bias * self.i_bias);
        if ((self.wall_plug - expected) / expected).abs() > 1e-12 {
            return Err(OnnError::domain(
                "wall_plug",
                format!("must equal p_optical/(v_bias*i_bias) = {expected}"),
            ));
        }
        Ok(())
    }

    /// Electrical bias power `P_b = V_b·I_b`.
    pub fn bias_power(&self) -> f64 {
        self.v_bias * self.i_bias
    }

    /// Differential resistance `V_b/I_b`.
    pub fn resistance(&self) -> f64 {
        self.v_bias / self.i_bias
    }

    /// Electro-optic modulation power `P_m = V_π²/R`.
    pub fn modulation_power(&self) -> f64 {
        self.v_pi * self.v_pi / self.resistance()
    }
}

/// Injection-locking range `δ_r = κ·√P_inj`.
pub fn lock_range(p_inj: f64, kappa: f64) -> Result<f64> {
    ensure_non_negative("p_inj", p_inj)?;
    ensure_positive("kappa", kappa)?;
    Ok(kappa * p_inj.sqrt())
}

/// Lock condition of a follower VCSEL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionLockState {
    pub lock_range_hz: f64,
    pub detuning_hz: f64,
    pub injection_power_w: f64,
    pub locked: bool,
}

impl InjectionLockState {
    pub fn new(injection_power_w: f64, detuning_hz: f64, kappa: f64) -> Result<Self> {
        if !detuning_hz.is_finite() {
            return Err(OnnError::domain("detuning_hz", "must be finite"));
        }
        let lock_range_hz = lock_range(injection_power_w, kappa)?;
        Ok(Self {
            lock_range_hz,
            detuning_hz,
            injection_power_w,
            locked: detuning_hz.abs() <= lock_range_hz && lock_range_hz > 0.0,
        })
    }

    /// Same injection, new detuning.
    pub fn with_detuning(&self, detuning_hz: f64) -> Self {
        Self {
            detuning_hz,
            locked: detuning_hz.abs() <= self.lock_range_hz && self.lock_range_hz > 0.0,
            ..*self
        }
    }

    /// Locked phase offset, `sin φ = δ_d/δ_r`.
    pub fn phase(&self) -> Result<f64> {
        if !self.locked {
            return Err(OnnError::State(format!(
                "detuning {} Hz is outside the locking range {} Hz",
                self.detuning_hz, self.lock_range_hz
            )));
        }
        Ok((self.detuning_hz / self.lock_range_hz).clamp(-1.0, 1.0).asin())
    }
}

/// Maps a drive voltage to the locked optical phase.
///
/// The drive detunes the follower linearly, `δ_d = (2·v/V_π)·δ_r`, so a
/// peak-to-peak swing of V_π covers phases from −π/2 to π/2.
pub fn phase_from_drive(
    v_drive: f64,
    params: &VcselParams,
    lock: &InjectionLockState,
) -> Result<f64> {
    if !v_drive.is_finite() {
        return Err(OnnError::domain("v_drive", "must be finite"));
    }
    let limit = params.v_pi / 2.0;
    if v_drive.abs() > limit || lock.lock_range_hz <= 0.0 {
        return Err(OnnError::Unlocked { v_drive, limit });
    }
    let detuning = 2.0 * v_drive / params.v_pi * lock.lock_range_hz;
    lock.with_detuning(detuning).phase()
}

/// Drive voltage that encodes `value = sin φ`; inverse of [`phase_from_drive`].
pub fn drive_for_value(value: f64, params: &VcselParams) -> Result<f64> {
    check_unit_interval("value", value)?;
    Ok(value * params.v_pi / 2.0)
}
