//! Binary model container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "GLN1"  u32 version  u64 seed  u32 model_count
//! per model:
//!   u32 side_dim  u32 base_dim  u32 context_dim  u32 layers  u32 size[layers]
//!   f64 epsilon  f64 beta  f64 clip_radius
//!   gates    layer, neuron, gate order: f64 normal[side_dim], f64 offset
//!   weights  layer, neuron order: f64 row[input_width] for each context
//! u64 CRC-64/XZ of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};
use gln_core::{GlnConfig, GlnModel, HalfspaceGate, Neuron, NeuronGating};

use crate::error::{io_err, HarnessError, Result};

pub const MAGIC: &[u8; 4] = b"GLN1";
pub const VERSION: u32 = 1;

const CRC: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

pub fn checksum(bytes: &[u8]) -> u64 {
    CRC.checksum(bytes)
}

/// A set of models sharing one master seed, e.g. the class models of a
/// one-vs-all classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub seed: u64,
    pub models: Vec<GlnModel>,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        put_u32(&mut out, self.models.len());
        for m in &self.models {
            write_model(&mut out, m);
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ModelFile> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(HarnessError::NotAModelFile);
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(HarnessError::Version { found: version, supported: VERSION });
        }
        if bytes.len() < 8 + 12 + 8 {
            return Err(HarnessError::Truncated { needed: 28, found: bytes.len() });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8-byte tail"));
        let computed = checksum(body);
        if stored != computed {
            return Err(HarnessError::Checksum { stored, computed });
        }
        let mut r = Reader { bytes: body, pos: 8 };
        let seed = r.u64()?;
        let count = r.u32()? as usize;
        let models = (0..count).map(|_| read_model(&mut r)).collect::<Result<Vec<_>>>()?;
        if r.pos != body.len() {
            return Err(HarnessError::Config(format!("{} trailing bytes in model file", body.len() - r.pos)));
        }
        Ok(ModelFile { seed, models })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        ModelFile::from_bytes(&fs::read(path).map_err(io_err(path))?)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension fits in u32").to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn write_model(out: &mut Vec<u8>, m: &GlnModel) {
    let c = m.config();
    put_u32(out, c.side_dim);
    put_u32(out, c.base_dim);
    put_u32(out, c.context_dim);
    put_u32(out, c.layer_sizes.len());
    for &k in &c.layer_sizes {
        put_u32(out, k);
    }
    put_f64s(out, &[c.epsilon, c.beta, c.clip_radius]);
    for n in m.layers().iter().flatten() {
        for g in n.gating().gates() {
            put_f64s(out, g.normal());
            put_f64s(out, &[g.offset()]);
        }
    }
    for n in m.layers().iter().flatten() {
        put_f64s(out, n.weights());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(HarnessError::Truncated { needed: end, found: self.bytes.len() });
        }
        let out = self.bytes[self.pos..end].try_into().expect("length checked");
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if self.pos + n * 8 > self.bytes.len() {
            return Err(HarnessError::Truncated { needed: self.pos + n * 8, found: self.bytes.len() });
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

fn read_model(r: &mut Reader) -> Result<GlnModel> {
    let side_dim = r.u32()? as usize;
    let base_dim = r.u32()? as usize;
    let context_dim = r.u32()? as usize;
    let num_layers = r.u32()? as usize;
    let layer_sizes = (0..num_layers).map(|_| Ok(r.u32()? as usize)).collect::<Result<Vec<_>>>()?;
    let config = GlnConfig::new(side_dim, base_dim, layer_sizes.clone())
        .with_context_dim(context_dim)
        .with_epsilon(r.f64()?)
        .with_beta(r.f64()?)
        .with_clip_radius(r.f64()?);
    config.validate()?;
    let mut gatings = Vec::new();
    for &k in &layer_sizes {
        for _ in 0..k {
            let gates = (0..context_dim)
                .map(|_| {
                    let normal = r.f64s(side_dim)?;
                    Ok(HalfspaceGate::from_raw_parts(normal, r.f64()?))
                })
                .collect::<Result<Vec<_>>>()?;
            gatings.push(NeuronGating::new(gates)?);
        }
    }
    let mut gatings = gatings.into_iter();
    let mut layers = Vec::with_capacity(num_layers);
    for (i, &k) in layer_sizes.iter().enumerate() {
        let width = config.input_width(i);
        let mut neurons = Vec::with_capacity(k);
        for _ in 0..k {
            let weights = r.f64s(width << context_dim)?;
            neurons.push(Neuron::new(gatings.next().expect("one gating per neuron"), weights, width)?);
        }
        layers.push(neurons);
    }
    Ok(GlnModel::from_parts(config, layers)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gln_core::{seeded_rng, OneVsAll};

    fn sample() -> ModelFile {
        let cfg = GlnConfig::new(5, 4, vec![3, 2, 1]).with_context_dim(2);
        let mut ova = OneVsAll::new(cfg, 3, 17).unwrap();
        for k in 0..20 {
            let z: Vec<f64> = (0..5).map(|j| ((k * 7 + j) as f64).sin()).collect();
            ova.update(&z, &[0.2, 0.7, 0.4], k % 3, 0.1).unwrap();
        }
        ModelFile { seed: 17, models: ova.into_models() }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let file = sample();
        let bytes = file.to_bytes();
        let back = ModelFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn ungated_model_round_trips() {
        let cfg = GlnConfig::new(2, 3, vec![1]).with_context_dim(0);
        let m = GlnModel::new(cfg, &mut seeded_rng(0)).unwrap();
        let file = ModelFile { seed: 0, models: vec![m] };
        assert_eq!(ModelFile::from_bytes(&file.to_bytes()).unwrap(), file);
    }

    #[test]
    fn flipped_weight_byte_fails_checksum() {
        let mut bytes = sample().to_bytes();
        let k = bytes.len() - 20;
        bytes[k] ^= 0x10;
        assert!(matches!(ModelFile::from_bytes(&bytes), Err(HarnessError::Checksum { .. })));
    }

    #[test]
    fn newer_version_is_rejected() {
        let mut bytes = sample().to_bytes();
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        let n = bytes.len() - 8;
        let sum = checksum(&bytes[..n]);
        bytes[n..].copy_from_slice(&sum.to_le_bytes());
        assert!(matches!(ModelFile::from_bytes(&bytes), Err(HarnessError::Version { found: 2, supported: 1 })));
    }

    #[test]
    fn truncation_and_garbage_are_rejected() {
        let bytes = sample().to_bytes();
        assert!(ModelFile::from_bytes(&bytes[..bytes.len() / 2]).is_err());
        assert!(matches!(ModelFile::from_bytes(&bytes[..10]), Err(HarnessError::Truncated { .. })));
        assert!(matches!(ModelFile::from_bytes(b"nope"), Err(HarnessError::NotAModelFile)));
        let mut short = bytes[..bytes.len() - 24].to_vec();
        let sum = checksum(&short);
        short.extend_from_slice(&sum.to_le_bytes());
        assert!(matches!(ModelFile::from_bytes(&short), Err(HarnessError::Truncated { .. })));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gln");
        let file = sample();
        file.save(&path).unwrap();
        assert_eq!(ModelFile::load(&path).unwrap(), file);
    }
}
