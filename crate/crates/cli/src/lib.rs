//! `onn-sim`: reproducible experiments over the simulator crates.
//!
//! Every command resolves its parameters as preset < config file < flags,
//! writes its tables into `--out-dir` and echoes the resolved parameters to
//! `effective_config.toml`, which can be fed back through `--config`.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use onn_core::OnnError;
use serde::{Deserialize, Serialize};

pub use config::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "onn-sim", version, about = "Coherent VCSEL optical neural network simulator")]
pub struct Cli {
    /// RNG seed shared by every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML file with `seed`, `out_dir`, `format` and per-command tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SNR of the integrating homodyne receiver and a power sweep.
    Snr(commands::snr::SnrArgs),
    /// Energy ledger, compute density and hardware comparison.
    Energy(commands::energy::EnergyArgs),
    /// Train the MNIST classifier.
    Train(commands::train::TrainArgs),
    /// Inference of a checkpoint through the noisy optical engine.
    Infer(commands::infer::InferArgs),
    /// LO modulation and demodulation residual study.
    Modulate(commands::modulate::ModulateArgs),
    /// Fan-out image of an emitter array through a splitting mask.
    Fanout(commands::fanout::FanoutArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Snr(_) => "snr",
            Command::Energy(_) => "energy",
            Command::Train(_) => "train",
            Command::Infer(_) => "infer",
            Command::Modulate(_) => "modulate",
            Command::Fanout(_) => "fanout",
        }
    }
}

/// Result of one command: the summary record and a one-line digest.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: serde_json::Value,
    pub line: String,
}

/// Caps rayon's pool from `ONN_SIM_THREADS` (0 or unset = automatic).
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ONN_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::params(format!("ONN_SIM_THREADS must be a non-negative integer (got '{v}')")))?;
    if n > 0 {
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    let file = config::ConfigFile::load(cli.config.as_deref())?;
    let global = config::Global::resolve(&cli, &file)?;
    std::fs::create_dir_all(&global.out_dir).map_err(|e| {
        CliError::params(format!("cannot create out_dir {}: {e}", global.out_dir.display()))
    })?;
    let table = file.section(cli.command.name())?;
    match &cli.command {
        Command::Snr(a) => commands::snr::run(a, table, &global),
        Command::Energy(a) => commands::energy::run(a, table, &global),
        Command::Train(a) => commands::train::run(a, table, &global),
        Command::Infer(a) => commands::infer::run(a, table, &global),
        Command::Modulate(a) => commands::modulate::run(a, table, &global),
        Command::Fanout(a) => commands::fanout::run(a, table, &global),
    }
}

/// Parses `args` (program name first), runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { config::EXIT_PARAMS } else { 0 };
        }
    };
    match execute(cli) {
        Ok(o) => {
            println!("{}", o.line);
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

impl From<OnnError> for CliError {
    fn from(e: OnnError) -> Self {
        let code = match &e {
            OnnError::Domain { .. } | OnnError::Unlocked { .. } | OnnError::Shape(_) | OnnError::Length(_) => {
                config::EXIT_PARAMS
            }
            OnnError::Format(_) | OnnError::Mismatch(_) | OnnError::Csv(_) => config::EXIT_DATA,
            OnnError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => config::EXIT_MISSING,
            OnnError::Io(_) | OnnError::State(_) => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}
