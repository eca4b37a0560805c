//! Parameter resolution and provenance.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Cli, Format};

pub const EXIT_PARAMS: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MISSING: i32 = 4;

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn params(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARAMS,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MISSING,
            message: message.into(),
        }
    }

    pub fn io(context: &str, e: impl fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("{context}: {e}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (exit {})", self.message, self.code)
    }
}

impl std::error::Error for CliError {}

/// Parsed `--config` file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::missing(format!("config {}: {e}", path.display())))?;
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::params(format!("config {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    fn global<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.table
            .get(key)
            .map(|v| {
                v.clone()
                    .try_into()
                    .map_err(|e| CliError::params(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    /// The per-command table, if any.
    pub fn section(&self, name: &str) -> Result<Option<&toml::Table>, CliError> {
        match self.table.get(name) {
            None => Ok(None),
            Some(toml::Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(CliError::params(format!("config key `{name}` must be a table"))),
        }
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Global {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Global {
    pub fn resolve(cli: &Cli, file: &ConfigFile) -> Result<Self, CliError> {
        Ok(Self {
            seed: cli.seed.or(file.global("seed")?).unwrap_or(1),
            out_dir: cli.out_dir.clone().or(file.global("out_dir")?).unwrap_or_else(|| "out".into()),
            format: cli.format.or(file.global("format")?).unwrap_or(Format::Csv),
        })
    }
}

/// Overlays the keys of `file` on the serialized `base`; unknown keys are
/// rejected by name.
pub fn overlay<P: Serialize + DeserializeOwned>(base: &P, file: Option<&toml::Table>) -> Result<P, CliError> {
    let mut table = toml::Table::try_from(base).map_err(|e| CliError::params(e.to_string()))?;
    let Some(file) = file else {
        return Ok(toml::Value::Table(table).try_into().map_err(|e| CliError::params(e.to_string()))?);
    };
    for (k, v) in file {
        if k == "preset" {
            continue;
        }
        table.insert(k.clone(), v.clone());
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::params(format!("config: {e}")))
}

/// The preset name: flag, else the file's `preset` key, else `default`.
pub fn preset_name(flag: Option<&str>, file: Option<&toml::Table>, default: &str) -> Result<String, CliError> {
    if let Some(f) = flag {
        return Ok(f.to_string());
    }
    match file.and_then(|t| t.get("preset")) {
        None => Ok(default.to_string()),
        Some(toml::Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CliError::params("config key `preset` must be a string")),
    }
}

/// Writes `effective_config.toml`: the global settings plus `[name]`.
pub fn write_effective<P: Serialize>(global: &Global, name: &str, params: &P) -> Result<(), CliError> {
    let mut table = toml::Table::new();
    table.insert("seed".into(), toml::Value::Integer(global.seed as i64));
    table.insert(
        "out_dir".into(),
        toml::Value::String(global.out_dir.to_string_lossy().into_owned()),
    );
    table.insert("format".into(), toml::Value::try_from(global.format).expect("enum serializes"));
    table.insert(
        name.into(),
        toml::Value::try_from(params).map_err(|e| CliError::params(e.to_string()))?,
    );
    let text = toml::to_string(&table).map_err(|e| CliError::params(e.to_string()))?;
    let path = global.out_dir.join(EFFECTIVE_CONFIG);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path.display().to_string(), e))
}

/// Replaces `slot` when the flag is present.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
