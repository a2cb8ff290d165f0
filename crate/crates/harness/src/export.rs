//! Image and table export for saliency maps and decision surfaces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{io_err, Result};

/// Binary greyscale PGM (`P5`, maxval 255). Values are mapped linearly from
/// `[lo, hi]` to `[0, 255]` and clamped.
pub fn pgm_bytes(values: &[f64], rows: usize, cols: usize, lo: f64, hi: f64) -> Vec<u8> {
    assert_eq!(values.len(), rows * cols);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    out.extend(values.iter().map(|&v| (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

/// PGM with a symmetric range `[-a, a]`, `a = max |v|`, so zero maps to mid grey.
pub fn signed_pgm_bytes(values: &[f64], rows: usize, cols: usize) -> Vec<u8> {
    let a = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a = if a > 0.0 { a } else { 1.0 };
    pgm_bytes(values, rows, cols, -a, a)
}

/// One row of comma-separated values per image row, full precision.
pub fn grid_csv(values: &[f64], rows: usize, cols: usize) -> String {
    assert_eq!(values.len(), rows * cols);
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{}", values[r * cols + c]).expect("writing to a string");
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}
