//! `fanout`: receiver-plane image of an emitter array through a splitter.

use clap::Args;
use ndarray::Array2;
use onn_core::engine::{fanout_image, EmitterGrid, FanoutMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{overlay, set, write_effective, CliError, Global};
use crate::output::{write_matrix, write_records};
use crate::Outcome;

#[derive(Debug, Clone, Default, Args)]
pub struct FanoutArgs {
    /// Emitter array as ROWSxCOLS.
    #[arg(long)]
    pub array: Option<String>,
    /// Mask as MxM.
    #[arg(long)]
    pub mask: Option<String>,
    /// Emitter pitch in µm.
    #[arg(long)]
    pub pitch_um: Option<f64>,
    /// uniform (all emitters at 1) or random (seeded intensities in [0, 1)).
    #[arg(long)]
    pub pattern: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanoutParams {
    pub array: String,
    pub mask: String,
    pub pitch_um: f64,
    pub pattern: String,
}

impl Default for FanoutParams {
    fn default() -> Self {
        Self {
            array: "5x5".into(),
            mask: "9x9".into(),
            pitch_um: 80.0,
            pattern: "uniform".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoutSummary {
    pub array_rows: usize,
    pub array_cols: usize,
    pub mask: usize,
    pub image_rows: usize,
    pub image_cols: usize,
    pub total_intensity: f64,
    pub conv_oracle_exact: bool,
}

/// Parses `RxC` (also `R×C`) into positive dimensions.
pub fn parse_dims(field: &str, s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::params(format!("{field} must look like 5x5 (got `{s}`)"));
    let (r, c) = s.split_once(['x', 'X', '×']).ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 {
        return Err(CliError::params(format!("{field} dimensions must be >= 1 (got `{s}`)")));
    }
    Ok((r, c))
}

/// Direct gather-form convolution visiting emitters in the same order as
/// the scatter form, so the two agree bit for bit.
pub fn conv_oracle(a: &Array2<f64>, k: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (kr, kc) = k.dim();
    Array2::from_shape_fn((ar + kr - 1, ac + kc - 1), |(r, c)| {
        let mut s = 0.0;
        for p in r.saturating_sub(kr - 1)..=r.min(ar - 1) {
            for q in c.saturating_sub(kc - 1)..=c.min(ac - 1) {
                if a[[p, q]] != 0.0 {
                    s += a[[p, q]] * k[[r - p, c - q]];
                }
            }
        }
        s
    })
}

pub fn resolve(args: &FanoutArgs, file: Option<&toml::Table>) -> Result<FanoutParams, CliError> {
    let mut p = overlay(&FanoutParams::default(), file)?;
    set(&mut p.array, args.array.clone());
    set(&mut p.mask, args.mask.clone());
    set(&mut p.pitch_um, args.pitch_um);
    set(&mut p.pattern, args.pattern.clone());
    Ok(p)
}

pub fn run(args: &FanoutArgs, file: Option<&toml::Table>, global: &Global) -> Result<Outcome, CliError> {
    let p = resolve(args, file)?;
    let (rows, cols) = parse_dims("array", &p.array)?;
    let (m, m2) = parse_dims("mask", &p.mask)?;
    if m != m2 {
        return Err(CliError::params(format!("mask must be square (got `{}`)", p.mask)));
    }
    let grid = match p.pattern.as_str() {
        "uniform" => EmitterGrid::uniform(rows, cols, 1.0, p.pitch_um)?,
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
            EmitterGrid::new(Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>()), p.pitch_um)?
        }
        other => {
            return Err(CliError::params(format!("pattern must be uniform or random (got `{other}`)")));
        }
    };
    let mask = FanoutMask::uniform(m)?;
    let image = fanout_image(&grid, &mask)?;
    let exact = image == conv_oracle(&grid.pattern, &mask.grid);
    if !exact {
        return Err(CliError {
            code: 1,
            message: "fan-out image disagrees with the convolution oracle".into(),
        });
    }
    let summary = FanoutSummary {
        array_rows: rows,
        array_cols: cols,
        mask: m,
        image_rows: image.nrows(),
        image_cols: image.ncols(),
        total_intensity: image.sum(),
        conv_oracle_exact: exact,
    };
    let rows_out: Vec<Vec<f64>> = image.outer_iter().map(|r| r.to_vec()).collect();
    write_matrix(global, "fanout_image", &rows_out)?;
    write_records(global, "fanout_summary", std::slice::from_ref(&summary))?;
    write_effective(global, "fanout", &p)?;
    let line = format!(
        "fanout: {rows}x{cols} array through {m}x{m} mask -> {}x{} image, conv oracle exact",
        summary.image_rows, summary.image_cols
    );
    Ok(Outcome {
        summary: serde_json::to_value(&summary).expect("serializable"),
        line,
    })
}
