//! Seeded randomness.
//!
//! All sampled quantities (gate normals and offsets, per-class and per-pixel
//! model seeds) come from [`GlnRng`], ChaCha with 8 rounds seeded through
//! `SeedableRng::seed_from_u64`. Standard normal variates use the ziggurat
//! sampler of `rand_distr::StandardNormal`. Both are pure Rust and independent
//! of the platform's libm, so a seed reproduces gate parameters bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type GlnRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> GlnRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of an independent stream (a class model, a pixel model, a
/// task permutation) from a master seed.
///
/// `splitmix64(master + 0x9E3779B97F4A7C15 * (stream + 1))`, wrapping.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
