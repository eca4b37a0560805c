//! IDX-format MNIST ingestion.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use onn_core::{OnnError, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images flattened row-major with pixels mapped to [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if images.nrows() != labels.len() {
            return Err(OnnError::Mismatch(format!(
                "{} images but {} labels",
                images.nrows(),
                labels.len()
            )));
        }
        if let Some(v) = images.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(OnnError::domain("images", format!("values must lie in [-1, 1] (got {v})")));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 9) {
            return Err(OnnError::domain("labels", format!("must lie in 0..=9 (got {l})")));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.images.ncols()
    }

    /// The first `n` items (all of them if `n` exceeds the length).
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images.slice(s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

/// Pixel byte to amplitude: 0 → −1, 255 → +1.
pub fn pixel_value(p: u8) -> f64 {
    2.0 * p as f64 / 255.0 - 1.0
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| OnnError::Format(format!("{what}: header truncated")))
}

/// Parses an IDX image file into `(count, rows, cols, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(OnnError::Format(format!("images: bad magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    if rows == 0 || cols == 0 {
        return Err(OnnError::Format(format!("images: bad dimensions {rows}x{cols}")));
    }
    let body = &bytes[16..];
    let want = n * rows * cols;
    if body.len() != want {
        return Err(OnnError::Format(format!(
            "images: expected {want} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok((n, rows, cols, body))
}

pub fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(OnnError::Format(format!("labels: bad magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(OnnError::Format(format!("labels: expected {n} bytes, found {}", body.len())));
    }
    if let Some(l) = body.iter().find(|&&l| l > 9) {
        return Err(OnnError::Format(format!("labels: value {l} outside 0..=9")));
    }
    Ok(body)
}

pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = fs::read(images_path)?;
    let lab = fs::read(labels_path)?;
    let (n, rows, cols, px) = parse_images(&img)?;
    let labels = parse_labels(&lab)?;
    if labels.len() != n {
        return Err(OnnError::Mismatch(format!(
            "{} has {n} images but {} has {} labels",
            images_path.display(),
            labels_path.display(),
            labels.len()
        )));
    }
    let images = Array2::from_shape_fn((n, rows * cols), |(r, c)| pixel_value(px[r * rows * cols + c]));
    Ok(Dataset {
        images,
        labels: labels.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Standard file names inside an MNIST directory.
pub fn split_paths(dir: &Path, split: Split) -> (PathBuf, PathBuf) {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    (
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

pub fn load_split(dir: &Path, split: Split) -> Result<Dataset> {
    let (i, l) = split_paths(dir, split);
    load_mnist_idx(&i, &l)
}
