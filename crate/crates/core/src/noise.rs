//! Homodyne noise model and integrating-receiver SNR.
//!
//! The relative uncertainty of one readout of acquisition time `T` is
//!
//! ```text
//! σ = 1/(2√T) · √[ NEP²/(γ·P²) + 4·c_γ·hν/(η·P) + 2·b·c_γ²·RIN ]
//! c_γ = (1+γ)/(2γ),   c_γ² = (1+γ²)/(2γ)
//! ```
//!
//! with the three bracket terms being detector thermal noise, photon shot
//! noise and laser intensity noise. An integrating receiver reads out once
//! every `i` symbols, so `T = i·t_c` and σ falls as `1/√i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, OnnError, Result};
use crate::photonics::DEFAULT_CARRIER_HZ;

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Detector and laser noise constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Noise-equivalent power, W/√Hz.
    pub nep: f64,
    /// Relative intensity noise, dBc/Hz. `-inf` disables the term.
    pub rin_db: f64,
    /// Detector quantum efficiency in (0, 1].
    pub eta: f64,
    /// Optical frequency, Hz.
    pub nu: f64,
    /// 1 for balanced detection, 2 for a single detector.
    pub b: u32,
    /// Power ratio γ = P_W / P_X.
    pub gamma: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("nep", self.nep)?;
        if self.rin_db.is_nan() || self.rin_db == f64::INFINITY {
            return Err(OnnError::domain("rin_db", "must be a finite dB value or -inf"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(OnnError::domain(
                "eta",
                format!("must lie in (0, 1] (got {})", self.eta),
            ));
        }
        ensure_positive("nu", self.nu)?;
        if self.b != 1 && self.b != 2 {
            return Err(OnnError::domain(
                "b",
                format!("must be 1 (balanced) or 2 (unbalanced) (got {})", self.b),
            ));
        }
        ensure_positive("gamma", self.gamma)
    }

    /// RIN as a linear power ratio per Hz.
    pub fn rin_linear(&self) -> f64 {
        10f64.powf(self.rin_db / 10.0)
    }

    pub fn c_gamma(&self) -> f64 {
        (1.0 + self.gamma) / (2.0 * self.gamma)
    }

    pub fn c_gamma_sq(&self) -> f64 {
        (1.0 + self.gamma * self.gamma) / (2.0 * self.gamma)
    }

    /// Photon energy hν.
    pub fn photon_energy(&self) -> f64 {
        PLANCK * self.nu
    }
}

/// Clocking and input power of an integrating receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    /// Symbol rate R, symbols/s.
    pub clock_rate: f64,
    /// Symbol period, always `1/clock_rate`.
    pub t_c: f64,
    /// Symbols integrated per readout, `i ≥ 1`.
    pub integration_steps: u64,
    /// Input power at the detector, P_i = P_X (watts).
    pub p_input: f64,
}

impl ReceiverConfig {
    pub fn new(clock_rate: f64, integration_steps: u64, p_input: f64) -> Result<Self> {
        ensure_positive("clock_rate", clock_rate)?;
        let rx = Self {
            clock_rate,
            t_c: 1.0 / clock_rate,
            integration_steps,
            p_input,
        };
        rx.validate()?;
        Ok(rx)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("clock_rate", self.clock_rate)?;
        ensure_positive("t_c", self.t_c)?;
        if (self.t_c * self.clock_rate - 1.0).abs() > 1e-12 {
            return Err(OnnError::domain("t_c", "must equal 1/clock_rate"));
        }
        if self.integration_steps < 1 {
            return Err(OnnError::domain("integration_steps", "must be >= 1"));
        }
        ensure_positive("p_input", self.p_input)
    }

    /// Acquisition time `T = i·t_c`.
    pub fn acquisition_time(&self) -> f64 {
        self.integration_steps as f64 * self.t_c
    }

    pub fn with_power(&self, p_input: f64) -> Self {
        Self { p_input, ..*self }
    }
}

/// Fractional contributions of the three noise sources to σ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseTerms {
    pub thermal: f64,
    pub shot: f64,
    pub rin: f64,
}

impl NoiseTerms {
    /// Name of the dominant source.
    pub fn dominant(&self) -> &'static str {
        if self.shot >= self.thermal && self.shot >= self.rin {
            "shot"
        } else if self.thermal >= self.rin {
            "thermal"
        } else {
            "rin"
        }
    }
}

/// Relative uncertainty of one homodyne readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrResult {
    pub sigma: f64,
    pub snr: f64,
    pub noise_terms: NoiseTerms,
}

impl SnrResult {
    /// A result with the given σ and no source breakdown (all shot noise).
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        ensure_non_negative("sigma", sigma)?;
        Ok(Self {
            sigma,
            snr: 1.0 / sigma,
            noise_terms: NoiseTerms {
                thermal: 0.0,
                shot: 1.0,
                rin: 0.0,
            },
        })
    }

    pub fn from_snr(snr: f64) -> Result<Self> {
        ensure_positive("snr", snr)?;
        Self::from_sigma(1.0 / snr)
    }
}

/// The three bracket terms `[thermal, shot, rin]` (units 1/Hz).
fn bracket_terms(noise: &NoiseParams, p_i: f64) -> [f64; 3] {
    [
        noise.nep * noise.nep / (noise.gamma * p_i * p_i),
        4.0 * noise.c_gamma() * noise.photon_energy() / (noise.eta * p_i),
        2.0 * noise.b as f64 * noise.c_gamma_sq() * noise.rin_linear(),
    ]
}

/// σ and SNR for one readout after acquisition time `t_acq`.
pub fn sigma_per_sample(noise: &NoiseParams, p_i: f64, t_acq: f64) -> Result<SnrResult> {
    noise.validate()?;
    ensure_positive("p_input", p_i)?;
    ensure_positive("t_acq", t_acq)?;
    let terms = bracket_terms(noise, p_i);
    let total: f64 = terms.iter().sum();
    let sigma = total.sqrt() / (2.0 * t_acq.sqrt());
    // shot noise is strictly positive for valid inputs, so total > 0
    Ok(SnrResult {
        sigma,
        snr: 1.0 / sigma,
        noise_terms: NoiseTerms {
            thermal: terms[0] / total,
            shot: terms[1] / total,
            rin: terms[2] / total,
        },
    })
}

/// σ for an integrating receiver that reads out every `i` symbols.
pub fn sigma_integrating(noise: &NoiseParams, rx: &ReceiverConfig) -> Result<SnrResult> {
    rx.validate()?;
    sigma_per_sample(noise, rx.p_input, rx.acquisition_time())
}

/// Photons per operation, `N = P·t_c/(2hν)` (one symbol is one MAC = 2 OP).
pub fn photons_per_op(p_i: f64, rx: &ReceiverConfig, nu: f64) -> f64 {
    p_i * rx.t_c / (2.0 * PLANCK * nu)
}

/// Inverse of [`photons_per_op`].
pub fn power_for_photons(photons: f64, rx: &ReceiverConfig, nu: f64) -> f64 {
    2.0 * photons * PLANCK * nu / rx.t_c
}

/// Optical energy per operation, `ε = N·hν`.
pub fn energy_per_op(photons: f64, nu: f64) -> f64 {
    photons * PLANCK * nu
}

/// Draws `n` zero-mean Gaussian samples with standard deviation `σ`.
///
/// Each call owns a generator seeded from `rng_seed`, so equal seeds give
/// bit-identical vectors.
pub fn sample_noise(result: &SnrResult, rng_seed: u64, n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(OnnError::domain("n", "must be >= 1"));
    }
    let normal = Normal::new(0.0, result.sigma)
        .map_err(|e| OnnError::domain("sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// One row of an SNR-vs-power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p_i_watts: f64,
    pub photons_per_op: f64,
    pub snr: f64,
    pub frac_thermal: f64,
    pub frac_shot: f64,
    pub frac_rin: f64,
}

/// SNR of the integrating receiver at each input power.
pub fn snr_sweep(
    noise: &NoiseParams,
    rx_template: &ReceiverConfig,
    powers: &[f64],
) -> Result<Vec<SweepRow>> {
    if powers.is_empty() {
        return Err(OnnError::domain("powers", "sweep needs at least one power"));
    }
    powers
        .iter()
        .map(|&p| {
            let rx = rx_template.with_power(p);
            let r = sigma_integrating(noise, &rx)?;
            Ok(SweepRow {
                p_i_watts: p,
                photons_per_op: photons_per_op(p, &rx, noise.nu),
                snr: r.snr,
                frac_thermal: r.noise_terms.thermal,
                frac_shot: r.noise_terms.shot,
                frac_rin: r.noise_terms.rin,
            })
        })
        .collect()
}

/// `n` powers spaced logarithmically between `lo` and `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    ensure_positive("sweep_min", lo)?;
    ensure_positive("sweep_max", hi)?;
    if n == 0 {
        return Err(OnnError::domain("sweep_points", "must be >= 1"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Writes a sweep as CSV with a header row.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Caption parameter sets of the SNR figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnrPreset {
    /// Per-sample readout of the experiment: 100 MS/s, γ = j = 81.
    FigS2,
    /// Integrating receiver at 1 GS/s over i = 784 steps.
    FigS3a,
    /// High-speed projection: 25 GS/s over i = 10⁶ steps.
    FigS3b,
}

/// A resolved preset: noise constants, receiver and an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrScenario {
    pub noise: NoiseParams,
    pub rx: ReceiverConfig,
}

impl SnrPreset {
    pub fn scenario(self) -> SnrScenario {
        match self {
            // NEP 5 pW/√Hz, RIN −145 dBc/Hz, b = 2, γ = 9×9, ν = 307.5 THz,
            // η = 0.65, P_X = 0.6 µW, R = 100 MS/s read every symbol.
            SnrPreset::FigS2 => SnrScenario {
                noise: NoiseParams {
                    nep: 5e-12,
                    rin_db: -145.0,
                    eta: 0.65,
                    nu: DEFAULT_CARRIER_HZ,
                    b: 2,
                    gamma: 81.0,
                },
                rx: ReceiverConfig::new(100e6, 1, 0.6e-6).expect("preset"),
            },
            // R = 1 GS/s, i = 784, NEP 1 pW/√Hz, b = 2, γ = 1; operating point
            // at 200 photons/OP.
            SnrPreset::FigS3a => {
                let noise = NoiseParams {
                    nep: 1e-12,
                    rin_db: -145.0,
                    eta: 0.65,
                    nu: DEFAULT_CARRIER_HZ,
                    b: 2,
                    gamma: 1.0,
                };
                let rx = ReceiverConfig::new(1e9, 784, 1.0).expect("preset");
                let p = power_for_photons(200.0, &rx, noise.nu);
                SnrScenario {
                    noise,
                    rx: rx.with_power(p),
                }
            }
            // R = 25 GS/s, i = 10⁶; operating point at 1 photon/OP (≈10 nW).
            SnrPreset::FigS3b => {
                let noise = NoiseParams {
                    nep: 1e-12,
                    rin_db: -145.0,
                    eta: 0.65,
                    nu: DEFAULT_CARRIER_HZ,
                    b: 2,
                    gamma: 1.0,
                };
                let rx = ReceiverConfig::new(25e9, 1_000_000, 1.0).expect("preset");
                let p = power_for_photons(1.0, &rx, noise.nu);
                SnrScenario {
                    noise,
                    rx: rx.with_power(p),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig_s2() -> (NoiseParams, f64, f64) {
        (SnrPreset::FigS2.scenario().noise, 0.6e-6, 10e-9)
    }

    /// Total noise amplitude N_t over bandwidth B = 1/(2T), divided by the
    /// RMS signal S = √(2γ)·η·P.
    fn sigma_from_noise_amplitude(n: &NoiseParams, p: f64, t: f64) -> f64 {
        let rin = 10f64.powf(n.rin_db / 10.0);
        let h_nu = 6.626_070_15e-34 * n.nu;
        let psd = (n.eta * n.nep).powi(2)
            + 2.0 * (1.0 + n.gamma) * h_nu * n.eta * p
            + n.b as f64 * (1.0 + n.gamma * n.gamma) * (n.eta * p).powi(2) * rin;
        let bandwidth = 1.0 / (2.0 * t);
        (psd * bandwidth).sqrt() / ((2.0 * n.gamma).sqrt() * n.eta * p)
    }

    #[test]
    fn fig_s2_snr() {
        let (n, p, t) = fig_s2();
        let r = sigma_per_sample(&n, p, t).unwrap();
        assert!((r.snr - 140.0).abs() <= 0.15 * 140.0, "snr {}", r.snr);
        assert_eq!(r.noise_terms.dominant(), "shot");
        assert_relative_eq!(r.snr * r.sigma, 1.0, max_relative = 1e-12);
        let t = r.noise_terms;
        assert_relative_eq!(t.thermal + t.shot + t.rin, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn fig_s2_matches_noise_amplitude_route() {
        let (n, p, t) = fig_s2();
        let r = sigma_per_sample(&n, p, t).unwrap();
        assert_relative_eq!(r.sigma, sigma_from_noise_amplitude(&n, p, t), max_relative = 1e-9);
    }

    #[test]
    fn shot_noise_limit() {
        let n = NoiseParams {
            nep: 0.0,
            rin_db: f64::NEG_INFINITY,
            eta: 0.65,
            nu: DEFAULT_CARRIER_HZ,
            b: 1,
            gamma: 1.0,
        };
        assert_eq!(n.c_gamma(), 1.0);
        assert_eq!(n.c_gamma_sq(), 1.0);
        let (p, t) = (1e-6, 1e-9);
        let r1 = sigma_per_sample(&n, p, t).unwrap();
        let closed = (4.0 * PLANCK * n.nu / (n.eta * p)).sqrt() / (2.0 * t.sqrt());
        assert_relative_eq!(r1.sigma, closed, max_relative = 1e-12);
        let r2 = sigma_per_sample(&n, 2.0 * p, t).unwrap();
        assert_relative_eq!(r1.sigma / r2.sigma, 2f64.sqrt(), max_relative = 1e-12);
        assert_eq!(r1.noise_terms.shot, 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (n, p, t) = fig_s2();
        assert!(sigma_per_sample(&n, 0.0, t).is_err());
        assert!(sigma_per_sample(&n, p, -1.0).is_err());
        let bad = NoiseParams { b: 3, ..n };
        assert!(sigma_per_sample(&bad, p, t).is_err());
        let bad = NoiseParams { eta: 1.2, ..n };
        assert!(sigma_per_sample(&bad, p, t).is_err());
        assert!(ReceiverConfig::new(1e9, 0, 1e-6).is_err());
        match ReceiverConfig::new(1e9, 1, 0.0) {
            Err(OnnError::Domain { field, .. }) => assert_eq!(field, "p_input"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rin_conversion() {
        let (n, _, _) = fig_s2();
        assert_relative_eq!(n.rin_linear(), 3.162_277_66e-15, max_relative = 1e-9);
    }

    #[test]
    fn integrating_reduces_to_per_sample() {
        let (n, _, _) = fig_s2();
        let rx = ReceiverConfig::new(1e9, 1, 1e-6).unwrap();
        let a = sigma_integrating(&n, &rx).unwrap();
        let b = sigma_per_sample(&n, 1e-6, rx.t_c).unwrap();
        assert_relative_eq!(a.sigma, b.sigma, max_relative = 1e-15);
        let rx100 = ReceiverConfig { integration_steps: 100, ..rx };
        let c = sigma_integrating(&n, &rx100).unwrap();
        assert_relative_eq!(c.snr / a.snr, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn fig_s3a_two_hundred_photons() {
        let s = SnrPreset::FigS3a.scenario();
        let n = photons_per_op(s.rx.p_input, &s.rx, s.noise.nu);
        assert_relative_eq!(n, 200.0, max_relative = 1e-12);
        let r = sigma_integrating(&s.noise, &s.rx).unwrap();
        assert!(r.snr >= 100.0 / 1.5 && r.snr <= 150.0, "snr {}", r.snr);
        assert_eq!(r.noise_terms.dominant(), "thermal");
        // 200 photons at 307.5 THz is ~40 aJ per operation.
        let eps = energy_per_op(200.0, s.noise.nu);
        assert!((eps - 40e-18).abs() <= 0.025 * 40e-18, "eps {eps}");
    }

    #[test]
    fn fig_s3b_one_photon_gives_six_bits() {
        let s = SnrPreset::FigS3b.scenario();
        assert_relative_eq!(s.rx.p_input, 10e-9, max_relative = 0.03);
        let r = sigma_integrating(&s.noise, &s.rx).unwrap();
        assert!(r.snr >= 64.0, "snr {}", r.snr);
    }

    #[test]
    fn photon_definitions() {
        let rx = ReceiverConfig::new(1e9, 1, 1e-6).unwrap();
        let nu = DEFAULT_CARRIER_HZ;
        let p = 2.0 * PLANCK * nu / rx.t_c;
        assert_relative_eq!(photons_per_op(p, &rx, nu), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn sample_noise_basics() {
        let zero = SnrResult::from_sigma(0.0).unwrap();
        assert!(sample_noise(&zero, 3, 100).unwrap().iter().all(|&v| v == 0.0));
        let r = SnrResult::from_sigma(0.01).unwrap();
        assert_eq!(sample_noise(&r, 9, 1000).unwrap(), sample_noise(&r, 9, 1000).unwrap());
        assert_ne!(sample_noise(&r, 9, 10).unwrap(), sample_noise(&r, 10, 10).unwrap());
        assert!(sample_noise(&r, 9, 0).is_err());
    }

    #[test]
    fn sample_noise_statistics() {
        let r = SnrResult::from_sigma(0.01).unwrap();
        let v = sample_noise(&r, 42, 1_000_000).unwrap();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let sd = m2.sqrt();
        assert!((0.00997..=0.01003).contains(&sd), "sd {sd}");
        assert!((m4 / (m2 * m2) - 3.0).abs() < 0.05);
    }

    #[test]
    fn sweep_fractions_and_csv() {
        let s = SnrPreset::FigS3a.scenario();
        let powers = log_spaced(1e-9, 1e-4, 11).unwrap();
        let rows = snr_sweep(&s.noise, &s.rx, &powers).unwrap();
        assert!(rows[0].frac_thermal > 0.5);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "p_i_watts,photons_per_op,snr,frac_thermal,frac_shot,frac_rin\n"
        ));
        assert_eq!(text.lines().count(), 12);
        assert!(snr_sweep(&s.noise, &s.rx, &[]).is_err());
    }

    fn noise_strategy() -> impl Strategy<Value = (NoiseParams, f64, f64)> {
        (
            0.0f64..1e-10,
            -170.0f64..-110.0,
            0.05f64..=1.0,
            1e14f64..1e15,
            1u32..=2,
            0.01f64..1000.0,
            1e-9f64..1e-3,
            1e-11f64..1e-3,
        )
            .prop_map(|(nep, rin_db, eta, nu, b, gamma, p, t)| {
                (NoiseParams { nep, rin_db, eta, nu, b, gamma }, p, t)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn noise_amplitude_route_agrees((n, p, t) in noise_strategy()) {
            let s = sigma_per_sample(&n, p, t).unwrap();
            let o = sigma_from_noise_amplitude(&n, p, t);
            prop_assert!((s.sigma - o).abs() <= 1e-9 * o);
        }
    }

    proptest! {
        #[test]
        fn sqrt_i_scaling((n, p, _t) in noise_strategy(), i in 1u64..10_000, k in 1u64..30) {
            let rx = ReceiverConfig::new(1e9, i, p).unwrap();
            let rxk = ReceiverConfig { integration_steps: k * k * i, ..rx };
            let a = sigma_integrating(&n, &rx).unwrap().sigma;
            let b = sigma_integrating(&n, &rxk).unwrap().sigma;
            prop_assert!((b * k as f64 - a).abs() <= 1e-12 * a);
        }

        #[test]
        fn single_source_isolation((n, p, t) in noise_strategy()) {
            let h = 1.0 / (2.0 * t.sqrt());
            let thermal_only = NoiseParams { rin_db: f64::NEG_INFINITY, ..n };
            // shot noise cannot be zeroed for P > 0; isolate by differencing
            let shot_only_closed = h * (4.0 * n.c_gamma() * PLANCK * n.nu / (n.eta * p)).sqrt();
            let zero_nep = NoiseParams { nep: 0.0, ..thermal_only };
            let s = sigma_per_sample(&zero_nep, p, t).unwrap().sigma;
            prop_assert!((s - shot_only_closed).abs() <= 1e-12 * shot_only_closed);
            let r = sigma_per_sample(&thermal_only, p, t).unwrap();
            let closed = h * (n.nep * n.nep / (n.gamma * p * p)
                + 4.0 * n.c_gamma() * PLANCK * n.nu / (n.eta * p)).sqrt();
            prop_assert!((r.sigma - closed).abs() <= 1e-12 * closed);
            prop_assert_eq!(r.noise_terms.rin, 0.0);
        }

        #[test]
        fn snr_nondecreasing_in_power((n, _p, _t) in noise_strategy(), mut ps in proptest::collection::vec(1e-10f64..1e-2, 2..20)) {
            ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rx = ReceiverConfig::new(1e9, 784, 1e-6).unwrap();
            let rows = snr_sweep(&n, &rx, &ps).unwrap();
            for pair in rows.windows(2) {
                prop_assert!(pair[1].snr >= pair[0].snr * (1.0 - 1e-12));
            }
        }

        #[test]
        fn photon_round_trip(p in 1e-12f64..1e-2, r in 1e6f64..1e11) {
            let rx = ReceiverConfig::new(r, 1, p).unwrap();
            let back = power_for_photons(photons_per_op(p, &rx, DEFAULT_CARRIER_HZ), &rx, DEFAULT_CARRIER_HZ);
            prop_assert!((back - p).abs() <= 1e-12 * p);
        }
    }
}
