//! Matrix and tensor I/O.
//!
//! Binary container layout, all little-endian:
//! `b"ONNT"`, `u32` rank, `rank × u32` dims, then the `f64` data in row-major
//! order. CSV matrices are plain numeric rows with no header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};

use crate::error::{OnnError, Result};

pub const MAGIC: &[u8; 4] = b"ONNT";

pub fn write_tensor<W: Write>(t: &ArrayD<f64>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(t.ndim() as u32).to_le_bytes())?;
    for &d in t.shape() {
        let d = u32::try_from(d).map_err(|_| OnnError::Shape(format!("dimension {d} exceeds u32")))?;
        out.write_all(&d.to_le_bytes())?;
    }
    for v in t.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| OnnError::Format(format!("tensor truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<ArrayD<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| OnnError::Format("tensor truncated before magic".into()))?;
    if &magic != MAGIC {
        return Err(OnnError::Format(format!("bad magic {magic:?}, expected ONNT")));
    }
    let rank = read_u32(&mut r, "rank")? as usize;
    if rank > 8 {
        return Err(OnnError::Format(format!("implausible rank {rank}")));
    }
    let dims = (0..rank)
        .map(|_| read_u32(&mut r, "dims").map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let n = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| OnnError::Format("tensor size overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(OnnError::Format(format!(
            "expected {} data bytes for shape {dims:?}, found {}",
            n * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ArrayD::from_shape_vec(IxDyn(&dims), data).map_err(|e| OnnError::Shape(e.to_string()))
}

pub fn save_tensor(path: &Path, t: &ArrayD<f64>) -> Result<()> {
    write_tensor(t, BufWriter::new(File::create(path)?))
}

pub fn load_tensor(path: &Path) -> Result<ArrayD<f64>> {
    read_tensor(BufReader::new(File::open(path)?))
}

/// Loads a rank-2 container.
pub fn load_matrix(path: &Path) -> Result<Array2<f64>> {
    load_tensor(path)?
        .into_dimensionality()
        .map_err(|_| OnnError::Shape(format!("{} is not a matrix", path.display())))
}

pub fn write_matrix_csv<W: Write>(m: &Array2<f64>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<Array2<f64>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec?;
        if cols.is_some_and(|c| c != rec.len()) {
            return Err(OnnError::Shape(format!("CSV row {rows} has {} fields", rec.len())));
        }
        cols = Some(rec.len());
        for f in rec.iter() {
            data.push(
                f.parse::<f64>()
                    .map_err(|_| OnnError::Format(format!("CSV row {rows}: '{f}' is not a number")))?,
            );
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), data).map_err(|e| OnnError::Shape(e.to_string()))
}

/// Reads a matrix from `.csv` or the binary container, by extension.
pub fn load_matrix_any(path: &Path) -> Result<Array2<f64>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_matrix_csv(BufReader::new(File::open(path)?))
    } else {
        load_matrix(path)
    }
}
