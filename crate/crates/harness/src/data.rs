//! Image datasets and their encoding into GLN inputs.

use std::path::{Path, PathBuf};

use gln_core::mixer::{clip_probability, sigmoid};
use gln_core::{derive_seed, seeded_rng, FeatureScaler};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::BaseMapKind;
use crate::deskew::deskew;
use crate::error::Result;
use crate::idx::{self, IdxImages};

/// Seed streams reserved for harness-side randomness, so they never coincide
/// with the per-class gate streams `derive_seed(seed, class)`.
pub mod streams {
    pub const PERMUTATION: u64 = 1 << 40;
    pub const LABEL_SHUFFLE: u64 = (1 << 40) + 1;
    pub const NOISE: u64 = (1 << 40) + 2;
    pub const SPLIT: u64 = (1 << 40) + 3;
    pub const RUN: u64 = (1 << 40) + 4;
    pub const SYNTHETIC: u64 = (1 << 40) + 5;
}

/// Grayscale images with intensities in `[0, 1]`, stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
    pub labels: Vec<u8>,
}

impl ImageSet {
    /// Raw bytes divided by 255.
    pub fn from_idx(images: &IdxImages, labels: Vec<u8>) -> ImageSet {
        ImageSet {
            rows: images.rows,
            cols: images.cols,
            pixels: images.pixels.iter().map(|&b| f64::from(b) / 255.0).collect(),
            labels,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> usize {
        usize::from(self.labels[i])
    }

    /// The first `n` examples (all of them if `n` is larger).
    pub fn head(&self, n: usize) -> ImageSet {
        let n = n.min(self.len());
        ImageSet {
            rows: self.rows,
            cols: self.cols,
            pixels: self.pixels[..n * self.dim()].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub fn deskewed(&self) -> ImageSet {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for i in 0..self.len() {
            pixels.extend(deskew(self.image(i), self.rows, self.cols));
        }
        ImageSet { pixels, ..self.clone_meta() }
    }

    /// Output pixel `k` of every image is input pixel `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> ImageSet {
        assert_eq!(perm.len(), self.dim());
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for i in 0..self.len() {
            let img = self.image(i);
            pixels.extend(perm.iter().map(|&k| img[k]));
        }
        ImageSet { pixels, ..self.clone_meta() }
    }

    /// Central `size x size` window of every image.
    pub fn center_crop(&self, size: usize) -> ImageSet {
        assert!(size <= self.rows && size <= self.cols);
        let (r0, c0) = ((self.rows - size) / 2, (self.cols - size) / 2);
        let mut pixels = Vec::with_capacity(self.len() * size * size);
        for i in 0..self.len() {
            let img = self.image(i);
            for r in r0..r0 + size {
                pixels.extend_from_slice(&img[r * self.cols + c0..r * self.cols + c0 + size]);
            }
        }
        ImageSet { rows: size, cols: size, pixels, labels: self.labels.clone() }
    }

    /// Pixels strictly above `threshold` become `true`.
    pub fn binarize(&self, threshold: f64) -> Vec<Vec<bool>> {
        (0..self.len()).map(|i| self.image(i).iter().map(|&v| v > threshold).collect()).collect()
    }

    /// Same images with the labels randomly permuted.
    pub fn with_shuffled_labels(&self, seed: u64) -> ImageSet {
        let mut labels = self.labels.clone();
        labels.shuffle(&mut seeded_rng(derive_seed(seed, streams::LABEL_SHUFFLE)));
        ImageSet { labels, ..self.clone() }
    }

    /// I.i.d. uniform intensities with the same shape and labels as `self`.
    pub fn uniform_noise_like(&self, seed: u64) -> ImageSet {
        let mut rng = seeded_rng(derive_seed(seed, streams::NOISE));
        let pixels = (0..self.pixels.len()).map(|_| rng.random::<f64>()).collect();
        ImageSet { pixels, ..self.clone_meta() }
    }

    fn clone_meta(&self) -> ImageSet {
        ImageSet { rows: self.rows, cols: self.cols, pixels: Vec::new(), labels: self.labels.clone() }
    }

    /// Mean and standard deviation over every pixel of every image.
    pub fn pixel_stats(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let mean = self.pixels.iter().sum::<f64>() / n;
        let var = self.pixels.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

/// Task `0` is the identity; task `k > 0` is a seeded shuffle of `0..dim`.
pub fn permute_task(seed: u64, task: u64, dim: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..dim).collect();
    if task > 0 {
        let stream = derive_seed(seed, streams::PERMUTATION);
        perm.shuffle(&mut seeded_rng(derive_seed(stream, task)));
    }
    perm
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// How base predictions are derived from a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMap {
    /// Each feature's declared range mapped affinely onto `[eps, 1 - eps]`.
    Affine(FeatureScaler),
    /// The standardized feature passed through the logistic function and
    /// clipped to `[eps, 1 - eps]`, so its logit is the side information itself.
    Logistic { epsilon: f64 },
}

/// Turns a feature vector into side information and base predictions.
///
/// Side information is the standardized feature vector, using one mean and one
/// standard deviation per feature (a single shared pair for images).
#[derive(Debug, Clone, PartialEq)]
pub struct InputEncoder {
    means: Vec<f64>,
    inv_stds: Vec<f64>,
    base: BaseMap,
}

impl InputEncoder {
    pub fn new(means: Vec<f64>, stds: Vec<f64>, base: BaseMap) -> InputEncoder {
        assert_eq!(means.len(), stds.len());
        if let BaseMap::Affine(scaler) = &base {
            assert_eq!(means.len(), scaler.dim());
        }
        let inv_stds = stds.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 1.0 }).collect();
        InputEncoder { means, inv_stds, base }
    }

    /// Encoder for images in `[0, 1]` with pixel statistics from `train`.
    pub fn for_images(train: &ImageSet, kind: BaseMapKind, epsilon: f64) -> Result<InputEncoder> {
        let (mean, std) = train.pixel_stats();
        let d = train.dim();
        let base = match kind {
            BaseMapKind::Logistic => BaseMap::Logistic { epsilon },
            BaseMapKind::Affine => BaseMap::Affine(FeatureScaler::uniform(d, 0.0, 1.0, epsilon)?),
        };
        Ok(InputEncoder::new(vec![mean; d], vec![std; d], base))
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn side_info(&self, features: &[f64]) -> Vec<f64> {
        features.iter().zip(&self.means).zip(&self.inv_stds).map(|((x, m), s)| (x - m) * s).collect()
    }

    pub fn base(&self, features: &[f64]) -> Result<Vec<f64>> {
        match &self.base {
            BaseMap::Affine(scaler) => Ok(scaler.squash(features)?),
            BaseMap::Logistic { epsilon } => {
                Ok(self.side_info(features).into_iter().map(|v| clip_probability(sigmoid(v), *epsilon)).collect())
            }
        }
    }

    pub fn encode(&self, features: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.side_info(features), self.base(features)?))
    }
}

/// Standard MNIST file names inside a directory.
#[derive(Debug, Clone)]
pub struct MnistFiles {
    pub dir: PathBuf,
}

impl MnistFiles {
    pub fn new(dir: impl AsRef<Path>) -> MnistFiles {
        MnistFiles { dir: dir.as_ref().to_path_buf() }
    }

    pub fn train(&self) -> Result<ImageSet> {
        self.load("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
    }

    pub fn test(&self) -> Result<ImageSet> {
        self.load("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
    }

    fn load(&self, images: &str, labels: &str) -> Result<ImageSet> {
        let (imgs, labs) = idx::load_pair(&self.dir.join(images), &self.dir.join(labels))?;
        Ok(ImageSet::from_idx(&imgs, labs))
    }
}
