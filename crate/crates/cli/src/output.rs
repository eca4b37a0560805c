//! Table writers: CSV with a header row, or a JSON array of the same records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::config::{CliError, Global};
use crate::Format;

fn create(global: &Global, stem: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let ext = match global.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = global.out_dir.join(format!("{stem}.{ext}"));
    let f = File::create(&path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    Ok((path, BufWriter::new(f)))
}

pub fn write_records<T: Serialize>(global: &Global, stem: &str, records: &[T]) -> Result<PathBuf, CliError> {
    let (path, mut out) = create(global, stem)?;
    let err = |e: &dyn std::fmt::Display| CliError::io(&path.display().to_string(), e);
    match global.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in records {
                w.serialize(r).map_err(|e| err(&e))?;
            }
            w.flush().map_err(|e| err(&e))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, records).map_err(|e| err(&e))?;
            writeln!(out).map_err(|e| err(&e))?;
        }
    }
    out.flush().map_err(|e| err(&e))?;
    Ok(path)
}

/// A numeric matrix; CSV gets a `c0,c1,…` header, JSON a nested array.
pub fn write_matrix<T: Serialize + ToString>(
    global: &Global,
    stem: &str,
    rows: &[Vec<T>],
) -> Result<PathBuf, CliError> {
    let (path, mut out) = create(global, stem)?;
    let err = |e: &dyn std::fmt::Display| CliError::io(&path.display().to_string(), e);
    match global.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let cols = rows.first().map_or(0, Vec::len);
            w.write_record((0..cols).map(|c| format!("c{c}"))).map_err(|e| err(&e))?;
            for r in rows {
                w.write_record(r.iter().map(ToString::to_string)).map_err(|e| err(&e))?;
            }
            w.flush().map_err(|e| err(&e))?;
        }
        Format::Json => {
            serde_json::to_writer(&mut out, rows).map_err(|e| err(&e))?;
            writeln!(out).map_err(|e| err(&e))?;
        }
    }
    out.flush().map_err(|e| err(&e))?;
    Ok(path)
}

pub fn write_text(global: &Global, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = global.out_dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    Ok(path)
}
