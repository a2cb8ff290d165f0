//! Big-endian IDX tensors as used by the MNIST distribution.

use std::fs;
use std::path::Path;

use crate::error::{io_err, HarnessError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// `count` images of `rows x cols` bytes, stored row-major back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(HarnessError::Truncated { needed: self.pos.saturating_add(n), found: self.bytes.len() })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(HarnessError::BadMagic { expected, found });
        }
        Ok(())
    }
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(IMAGES_MAGIC)?;
    let count = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let pixels = r.take(count * rows * cols)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(LABELS_MAGIC)?;
    let count = r.u32()? as usize;
    Ok(r.take(count)?.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn load_images(path: &Path) -> Result<IdxImages> {
    parse_images(&fs::read(path).map_err(io_err(path))?)
}

pub fn load_labels(path: &Path) -> Result<Vec<u8>> {
    parse_labels(&fs::read(path).map_err(io_err(path))?)
}

/// Loads an image file and its label file, checking that the counts agree.
pub fn load_pair(images: &Path, labels: &Path) -> Result<(IdxImages, Vec<u8>)> {
    let imgs = load_images(images)?;
    let labs = load_labels(labels)?;
    if imgs.count != labs.len() {
        return Err(HarnessError::CountMismatch { images: imgs.count, labels: labs.len() });
    }
    Ok((imgs, labs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> IdxImages {
        IdxImages { count: 2, rows: 2, cols: 3, pixels: (0..12).collect() }
    }

    #[test]
    fn round_trips() {
        let imgs = tiny();
        assert_eq!(parse_images(&encode_images(&imgs)).unwrap(), imgs);
        assert_eq!(parse_images(&encode_images(&imgs)).unwrap().image(1), &[6, 7, 8, 9, 10, 11]);
        assert_eq!(parse_labels(&encode_labels(&[3, 1, 4])).unwrap(), vec![3, 1, 4]);
    }

    #[test]
    fn rejects_wrong_magic() {
        let err = parse_labels(&encode_images(&tiny())).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
        let err = parse_images(&encode_labels(&[1, 2])).unwrap_err();
        assert!(matches!(err, HarnessError::BadMagic { expected: IMAGES_MAGIC, found: LABELS_MAGIC }));
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = encode_images(&tiny());
        bytes.pop();
        assert!(parse_images(&bytes).unwrap_err().to_string().contains("truncated"));
        assert!(parse_labels(&[0, 0, 8]).unwrap_err().to_string().contains("truncated"));
        let mut labels = encode_labels(&[1, 2, 3]);
        labels.truncate(9);
        assert!(matches!(parse_labels(&labels), Err(HarnessError::Truncated { .. })));
    }

    #[test]
    fn pair_counts_must_agree() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = (dir.path().join("i"), dir.path().join("l"));
        fs::write(&i, encode_images(&tiny())).unwrap();
        fs::write(&l, encode_labels(&[1, 2, 3])).unwrap();
        assert!(matches!(load_pair(&i, &l), Err(HarnessError::CountMismatch { images: 2, labels: 3 })));
        fs::write(&l, encode_labels(&[1, 2])).unwrap();
        assert_eq!(load_pair(&i, &l).unwrap().1, vec![1, 2]);
    }
}
