use std::fs;
use std::path::{Path, PathBuf};

use onn_core::OnnError;
use onn_train::mnist::{load_split, parse_images, pixel_value, split_paths, Split};
use onn_train::load_mnist_idx;

fn idx_images(n: u32, rows: u32, cols: u32, px: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [0x0803, n, rows, cols] {
        b.extend_from_slice(&u32::to_be_bytes(v));
    }
    b.extend_from_slice(px);
    b
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(&0x0801u32.to_be_bytes());
    b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    b.extend_from_slice(labels);
    b
}

fn write_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
    let i = dir.join("img");
    let l = dir.join("lab");
    fs::write(&i, images).unwrap();
    fs::write(&l, labels).unwrap();
    (i, l)
}

#[test]
fn pixel_map_endpoints() {
    assert_eq!(pixel_value(0), -1.0);
    assert_eq!(pixel_value(255), 1.0);
    assert!(pixel_value(128).abs() < 0.01);
}

#[test]
fn synthetic_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let px: Vec<u8> = (0..3 * 2 * 2).map(|k| (k * 20) as u8).collect();
    let (i, l) = write_pair(dir.path(), &idx_images(3, 2, 2, &px), &idx_labels(&[7, 0, 9]));
    let d = load_mnist_idx(&i, &l).unwrap();
    assert_eq!(d.images.dim(), (3, 4));
    assert_eq!(d.labels, vec![7, 0, 9]);
    assert_eq!(d.images[[1, 2]], pixel_value(120));
    assert!(d.images.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = idx_images(2, 2, 2, &[0; 8]);
    let labels = idx_labels(&[1, 2]);

    let (i, l) = write_pair(dir.path(), &good[..good.len() - 1], &labels);
    assert!(matches!(load_mnist_idx(&i, &l), Err(OnnError::Format(_))));

    let mut bad = good.clone();
    bad[3] = 0x01;
    let (i, l) = write_pair(dir.path(), &bad, &labels);
    assert!(matches!(load_mnist_idx(&i, &l), Err(OnnError::Format(_))));

    let (i, l) = write_pair(dir.path(), &good[..10], &labels);
    assert!(matches!(load_mnist_idx(&i, &l), Err(OnnError::Format(_))));

    let (i, l) = write_pair(dir.path(), &good, &idx_labels(&[1, 12]));
    assert!(matches!(load_mnist_idx(&i, &l), Err(OnnError::Format(_))));

    assert!(matches!(parse_images(&idx_images(1, 0, 5, &[])), Err(OnnError::Format(_))));
}

#[test]
fn count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), &idx_images(2, 2, 2, &[0; 8]), &idx_labels(&[1, 2, 3]));
    assert!(matches!(load_mnist_idx(&i, &l), Err(OnnError::Mismatch(_))));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_split(dir.path(), Split::Test), Err(OnnError::Io(_))));
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("ONN_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

#[test]
fn standard_test_split() {
    let dir = mnist_dir();
    if !split_paths(&dir, Split::Test).0.exists() {
        eprintln!("MNIST not found under {}; skipping", dir.display());
        return;
    }
    let d = load_split(&dir, Split::Test).unwrap();
    assert_eq!(d.len(), 10_000);
    assert_eq!(d.dim(), 784);
    assert!(d.images.iter().all(|v| v.abs() <= 1.0));
    assert!(d.images.iter().any(|&v| v == -1.0) && d.images.iter().any(|&v| v == 1.0));
    let mut counts = [0usize; 10];
    d.labels.iter().for_each(|&l| counts[l as usize] += 1);
    assert!(counts.iter().all(|&c| c > 800));
}
