//! The layered network.
//!
//! Layer 0 holds the base predictions with the bias probability `beta`
//! prepended. Each later layer holds gated geometric mixers; neuron `k` of
//! layer `i` reads all outputs of layer `i - 1` (bias included) and its output
//! is clipped to `[eps, 1 - eps]`. Layer sizes count gated neurons only: a
//! layer of `K` neurons feeds `K + 1` probabilities forward.
//!
//! Weight storage is context-major inside each neuron, so the deterministic
//! traversal order of all parameters is layer, neuron, context, input index.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{GlnError, Result};
use crate::gating::{NeuronGating, MAX_CONTEXT_DIM};
use crate::mixer::{clip_probability, dot, dot4, logit_unchecked, ogd_step, sigmoid, DEFAULT_EPSILON};

/// `sigmoid(1)`: the bias slot contributes exactly its weight in logit space.
pub const DEFAULT_BETA: f64 = 0.731_058_578_630_004_9;
pub const DEFAULT_CLIP_RADIUS: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GlnConfig {
    /// Length of the side information vector seen by every gate.
    pub side_dim: usize,
    /// Width of layer 0, bias slot included (`K_0`).
    pub base_dim: usize,
    /// Gated neurons per layer, input to output. The last entry must be 1.
    pub layer_sizes: Vec<usize>,
    /// Halfspace gates per neuron (`m`); each neuron has `2^m` weight rows.
    pub context_dim: usize,
    pub epsilon: f64,
    pub beta: f64,
    /// Weights are projected onto `[-clip_radius, clip_radius]`.
    pub clip_radius: f64,
}

impl GlnConfig {
    /// Config with default `epsilon`, `beta`, clip radius and no gating.
    pub fn new(side_dim: usize, base_dim: usize, layer_sizes: Vec<usize>) -> Self {
        Self {
            side_dim,
            base_dim,
            layer_sizes,
            context_dim: 0,
            epsilon: DEFAULT_EPSILON,
            beta: DEFAULT_BETA,
            clip_radius: DEFAULT_CLIP_RADIUS,
        }
    }

    pub fn with_context_dim(mut self, context_dim: usize) -> Self {
        self.context_dim = context_dim;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_clip_radius(mut self, clip_radius: f64) -> Self {
        self.clip_radius = clip_radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_dim == 0 {
            return Err(GlnError::InvalidArchitecture("base layer needs at least the bias slot"));
        }
        if self.layer_sizes.is_empty() {
            return Err(GlnError::InvalidArchitecture("no layers"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(GlnError::InvalidArchitecture("empty layer"));
        }
        if self.layer_sizes.last() != Some(&1) {
            return Err(GlnError::InvalidArchitecture("output layer must have exactly one neuron"));
        }
        if self.context_dim > MAX_CONTEXT_DIM {
            return Err(GlnError::InvalidArchitecture("context dimension above 24"));
        }
        if self.context_dim > 0 && self.side_dim == 0 {
            return Err(GlnError::InvalidArchitecture("gating needs side information"));
        }
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(GlnError::InvalidParameter { name: "epsilon", value: eps });
        }
        if !(self.beta >= eps && self.beta <= 1.0 - eps) || self.beta == 0.5 {
            return Err(GlnError::InvalidParameter { name: "beta", value: self.beta });
        }
        if !(self.clip_radius > 1.0 && self.clip_radius.is_finite()) {
            return Err(GlnError::InvalidParameter { name: "clip_radius", value: self.clip_radius });
        }
        Ok(())
    }

    /// Weight-row length of the neurons in gated layer `layer` (0-based).
    pub fn input_width(&self, layer: usize) -> usize {
        if layer == 0 {
            self.base_dim
        } else {
            self.layer_sizes[layer - 1] + 1
        }
    }

    pub fn num_contexts(&self) -> usize {
        1 << self.context_dim
    }
}

/// A gated geometric mixer: one weight row per context.
#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    gating: NeuronGating,
    weights: Vec<f64>,
    input_dim: usize,
}

impl Neuron {
    pub fn new(gating: NeuronGating, weights: Vec<f64>, input_dim: usize) -> Result<Self> {
        let expected = gating.num_contexts() * input_dim;
        if weights.len() != expected {
            return Err(GlnError::DimensionMismatch { expected, actual: weights.len() });
        }
        Ok(Self { gating, weights, input_dim })
    }

    pub fn gating(&self) -> &NeuronGating {
        &self.gating
    }

    /// All weight rows, context-major.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_contexts(&self) -> usize {
        self.gating.num_contexts()
    }

    pub fn row(&self, context: usize) -> &[f64] {
        &self.weights[context * self.input_dim..(context + 1) * self.input_dim]
    }

    pub fn row_mut(&mut self, context: usize) -> &mut [f64] {
        &mut self.weights[context * self.input_dim..(context + 1) * self.input_dim]
    }

    pub fn context_index(&self, z: &[f64]) -> Result<usize> {
        self.gating.context_index(z)
    }
}

/// Active context index of every neuron, layer-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextPattern(pub Vec<u32>);

/// Clipped probabilities of every layer from a forward pass, bias first.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    layers: Vec<Vec<f64>>,
    clip_clean: bool,
}

impl LayerActivations {
    /// Layer `i`'s outputs with the bias at index 0; layer 0 is the base layer.
    pub fn layer(&self, i: usize) -> &[f64] {
        &self.layers[i]
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn output(&self) -> f64 {
        self.layers.last().map_or(0.5, |l| l[1])
    }

    /// True iff no neuron's raw mixture fell outside `[eps, 1 - eps]`.
    pub fn clip_clean(&self) -> bool {
        self.clip_clean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlnModel {
    config: GlnConfig,
    layers: Vec<Vec<Neuron>>,
}

impl GlnModel {
    /// Builds a model with every weight at `1 / (row length)` and gates drawn
    /// from `rng` layer by layer, neuron by neuron, gate by gate.
    pub fn new<R: Rng + ?Sized>(config: GlnConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.layer_sizes.len());
        for (i, &size) in config.layer_sizes.iter().enumerate() {
            let input_dim = config.input_width(i);
            let init = 1.0 / input_dim as f64;
            let mut neurons = Vec::with_capacity(size);
            for _ in 0..size {
                let gating = NeuronGating::sample(rng, config.side_dim, config.context_dim)?;
                let weights = vec![init; gating.num_contexts() * input_dim];
                neurons.push(Neuron { gating, weights, input_dim });
            }
            layers.push(neurons);
        }
        Ok(Self { config, layers })
    }

    /// Reassembles a model from stored parts, checking every structural
    /// invariant.
    pub fn from_parts(config: GlnConfig, layers: Vec<Vec<Neuron>>) -> Result<Self> {
        config.validate()?;
        if layers.len() != config.layer_sizes.len() {
            return Err(GlnError::DimensionMismatch { expected: config.layer_sizes.len(), actual: layers.len() });
        }
        for (i, neurons) in layers.iter().enumerate() {
            if neurons.len() != config.layer_sizes[i] {
                return Err(GlnError::DimensionMismatch { expected: config.layer_sizes[i], actual: neurons.len() });
            }
            for n in neurons {
                if n.input_dim != config.input_width(i) {
                    return Err(GlnError::DimensionMismatch { expected: config.input_width(i), actual: n.input_dim });
                }
                if n.gating.context_dim() != config.context_dim {
                    return Err(GlnError::DimensionMismatch {
                        expected: config.context_dim,
                        actual: n.gating.context_dim(),
                    });
                }
                if let Some(g) = n.gating.gates().iter().find(|g| g.dim() != config.side_dim) {
                    return Err(GlnError::DimensionMismatch { expected: config.side_dim, actual: g.dim() });
                }
                if let Some(&w) = n.weights.iter().find(|w| w.is_nan() || w.abs() > config.clip_radius) {
                    return Err(GlnError::InvalidParameter { name: "weight", value: w });
                }
            }
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &GlnConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Vec<Neuron>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Vec<Neuron>] {
        &mut self.layers
    }

    pub fn num_weights(&self) -> usize {
        self.layers.iter().flatten().map(|n| n.weights.len()).sum()
    }

    /// Forward pass without learning. Returns the output probability and every
    /// layer's clipped activations.
    pub fn forward(&self, z: &[f64], p_base: &[f64]) -> Result<(f64, LayerActivations)> {
        self.check_side(z)?;
        let mut prev = self.base_activations(p_base)?;
        let mut layers = Vec::with_capacity(self.layers.len() + 1);
        let mut clip_clean = true;
        for neurons in &self.layers {
            let logits = to_logits(&prev);
            let mut out = Vec::with_capacity(neurons.len() + 1);
            out.push(self.config.beta);
            for n in neurons {
                let c = n.gating.context_index_unchecked(z);
                let raw = sigmoid(dot(n.row(c), &logits));
                clip_clean &= raw >= self.config.epsilon && raw <= 1.0 - self.config.epsilon;
                out.push(clip_probability(raw, self.config.epsilon));
            }
            layers.push(core::mem::replace(&mut prev, out));
        }
        let output = prev[1];
        layers.push(prev);
        Ok((output, LayerActivations { layers, clip_clean }))
    }

    /// Output probability of the forward pass, without keeping activations.
    pub fn predict(&self, z: &[f64], p_base: &[f64]) -> Result<f64> {
        self.check_side(z)?;
        self.predict_inner(p_base, |_, n| n.gating.context_index_unchecked(z))
    }

    /// One pass that predicts and learns. Each neuron computes its clipped
    /// prediction from its current active row, then takes a projected gradient
    /// step on that row only. Layer `i` mixes the outputs layer `i - 1`
    /// produced in this same pass, and the returned probability is the output
    /// neuron's pre-update prediction.
    pub fn predict_and_update(&mut self, z: &[f64], p_base: &[f64], target: bool, learning_rate: f64) -> Result<f64> {
        self.check_side(z)?;
        self.update_inner(p_base, target, learning_rate, |_, n| n.gating.context_index_unchecked(z))
    }

    /// Active context of every neuron for side information `z`, in layer then
    /// neuron order. Gates never change, so a pattern can be computed once per
    /// input and reused across passes.
    pub fn context_pattern(&self, z: &[f64]) -> Result<ContextPattern> {
        self.check_side(z)?;
        Ok(ContextPattern(self.layers.iter().flatten().map(|n| n.gating.context_index_unchecked(z) as u32).collect()))
    }

    /// [`context_pattern`](Self::context_pattern) for a batch of inputs. Each
    /// gate normal is read once per batch rather than once per input, which
    /// matters when the gates do not fit in cache; the patterns are identical.
    pub fn context_patterns<Z: AsRef<[f64]>>(&self, zs: &[Z]) -> Result<Vec<ContextPattern>> {
        for z in zs {
            self.check_side(z.as_ref())?;
        }
        let neurons: usize = self.config.layer_sizes.iter().sum();
        let mut out = vec![vec![0u32; neurons]; zs.len()];
        for (k, n) in self.layers.iter().flatten().enumerate() {
            for (j, g) in n.gating.gates().iter().enumerate() {
                let mut quads = out.chunks_exact_mut(4).zip(zs.chunks_exact(4));
                for (patterns, z) in &mut quads {
                    let dots = dot4([z[0].as_ref(), z[1].as_ref(), z[2].as_ref(), z[3].as_ref()], g.normal());
                    for (pattern, d) in patterns.iter_mut().zip(dots) {
                        pattern[k] |= u32::from(d >= g.offset()) << j;
                    }
                }
                let done = zs.len() / 4 * 4;
                for (pattern, z) in out[done..].iter_mut().zip(&zs[done..]) {
                    pattern[k] |= u32::from(g.fires(z.as_ref())) << j;
                }
            }
        }
        Ok(out.into_iter().map(ContextPattern).collect())
    }

    /// [`predict`](Self::predict) with precomputed contexts.
    pub fn predict_with_pattern(&self, pattern: &ContextPattern, p_base: &[f64]) -> Result<f64> {
        self.check_pattern(pattern)?;
        self.predict_inner(p_base, |k, _| pattern.0[k] as usize)
    }

    /// [`predict_and_update`](Self::predict_and_update) with precomputed
    /// contexts.
    pub fn update_with_pattern(
        &mut self,
        pattern: &ContextPattern,
        p_base: &[f64],
        target: bool,
        learning_rate: f64,
    ) -> Result<f64> {
        self.check_pattern(pattern)?;
        self.update_inner(p_base, target, learning_rate, |k, _| pattern.0[k] as usize)
    }

    fn predict_inner(&self, p_base: &[f64], context: impl Fn(usize, &Neuron) -> usize) -> Result<f64> {
        let mut prev = self.base_activations(p_base)?;
        let mut k = 0;
        for neurons in &self.layers {
            let logits = to_logits(&prev);
            prev.clear();
            prev.push(self.config.beta);
            for n in neurons {
                let c = context(k, n);
                k += 1;
                prev.push(clip_probability(sigmoid(dot(n.row(c), &logits)), self.config.epsilon));
            }
        }
        Ok(prev[1])
    }

    fn update_inner(
        &mut self,
        p_base: &[f64],
        target: bool,
        learning_rate: f64,
        context: impl Fn(usize, &Neuron) -> usize,
    ) -> Result<f64> {
        if !(learning_rate > 0.0 && learning_rate < 1.0) {
            return Err(GlnError::InvalidLearningRate(learning_rate));
        }
        let mut prev = self.base_activations(p_base)?;
        let (eps, beta, radius) = (self.config.epsilon, self.config.beta, self.config.clip_radius);
        let mut k = 0;
        for neurons in &mut self.layers {
            let logits = to_logits(&prev);
            prev.clear();
            prev.push(beta);
            for n in neurons.iter_mut() {
                let c = context(k, n);
                k += 1;
                let row = n.row_mut(c);
                let p = clip_probability(sigmoid(dot(row, &logits)), eps);
                ogd_step(row, &logits, p, target, learning_rate, radius);
                prev.push(p);
            }
        }
        Ok(prev[1])
    }

    fn check_side(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.config.side_dim {
            return Err(GlnError::DimensionMismatch { expected: self.config.side_dim, actual: z.len() });
        }
        Ok(())
    }

    fn check_pattern(&self, pattern: &ContextPattern) -> Result<()> {
        let neurons: usize = self.config.layer_sizes.iter().sum();
        if pattern.0.len() != neurons {
            return Err(GlnError::DimensionMismatch { expected: neurons, actual: pattern.0.len() });
        }
        let contexts = self.config.num_contexts();
        if let Some(&c) = pattern.0.iter().find(|&&c| c as usize >= contexts) {
            return Err(GlnError::DimensionMismatch { expected: contexts, actual: c as usize });
        }
        Ok(())
    }

    /// Layer-0 activations `(beta, p_base...)`, validating the width and that
    /// every base prediction already lies in `[eps, 1 - eps]`.
    fn base_activations(&self, p_base: &[f64]) -> Result<Vec<f64>> {
        if p_base.len() + 1 != self.config.base_dim {
            return Err(GlnError::DimensionMismatch { expected: self.config.base_dim - 1, actual: p_base.len() });
        }
        let eps = self.config.epsilon;
        if let Some(&bad) = p_base.iter().find(|&&p| !(p >= eps && p <= 1.0 - eps)) {
            return Err(GlnError::ProbabilityDomain(bad));
        }
        let mut p0 = Vec::with_capacity(self.config.base_dim);
        p0.push(self.config.beta);
        p0.extend_from_slice(p_base);
        Ok(p0)
    }
}

#[inline]
fn to_logits(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&q| logit_unchecked(q)).collect()
}

/// Affine squashing of raw features onto `[eps, 1 - eps]`.
///
/// Feature `j` with declared range `[lo, hi]` maps `lo` to `eps`, `hi` to
/// `1 - eps`, and is clipped outside the range. A degenerate range maps to 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    ranges: Vec<(f64, f64)>,
    epsilon: f64,
}

impl FeatureScaler {
    pub fn new(ranges: Vec<(f64, f64)>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(GlnError::InvalidParameter { name: "epsilon", value: epsilon });
        }
        if let Some(&(lo, hi)) = ranges.iter().find(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi) {
            return Err(GlnError::InvalidParameter { name: "feature range", value: hi - lo });
        }
        Ok(Self { ranges, epsilon })
    }

    /// Same range for `dim` features.
    pub fn uniform(dim: usize, lo: f64, hi: f64, epsilon: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim], epsilon)
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    /// Base predictions without the bias slot.
    pub fn squash(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.ranges.len() {
            return Err(GlnError::DimensionMismatch { expected: self.ranges.len(), actual: features.len() });
        }
        let eps = self.epsilon;
        Ok(features
            .iter()
            .zip(&self.ranges)
            .map(
                |(&f, &(lo, hi))| {
                    if hi > lo {
                        clip_probability(eps + (f - lo) / (hi - lo) * (1.0 - 2.0 * eps), eps)
                    } else {
                        0.5
                    }
                },
            )
            .collect())
    }
}

/// Full layer-0 vector `(beta, s(f_1), ..., s(f_n))`.
pub fn base_layer(features: &[f64], scaler: &FeatureScaler, beta: f64) -> Result<Vec<f64>> {
    let squashed = scaler.squash(features)?;
    let mut p0 = Vec::with_capacity(squashed.len() + 1);
    p0.push(beta);
    p0.extend(squashed);
    Ok(p0)
}

/// Learning-rate schedules indexed by the 1-based round `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `min(scale / t, cap)`.
    InverseT {
        scale: f64,
        cap: f64,
    },
}

impl LearningRate {
    /// `min(100 / t, 0.01)`, the single-pass MNIST schedule.
    pub const MNIST: LearningRate = LearningRate::InverseT { scale: 100.0, cap: 0.01 };

    /// `"mnist"`, `"inverse_t"` (uses `scale` and `cap`) or `"constant"` (uses
    /// `scale` as the rate).
    pub fn from_name(name: &str, scale: f64, cap: f64) -> Result<Self> {
        let schedule = match name {
            "mnist" => Self::MNIST,
            "inverse_t" => Self::InverseT { scale, cap },
            "constant" => Self::Constant(scale),
            other => return Err(GlnError::UnknownSchedule(other.into())),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant(rate) if !(rate > 0.0 && rate < 1.0) => Err(GlnError::InvalidLearningRate(rate)),
            Self::InverseT { scale, .. } if !(scale > 0.0 && scale.is_finite()) => {
                Err(GlnError::InvalidParameter { name: "schedule scale", value: scale })
            }
            Self::InverseT { cap, .. } if !(cap > 0.0 && cap < 1.0) => Err(GlnError::InvalidLearningRate(cap)),
            _ => Ok(()),
        }
    }

    /// Rate for round `t >= 1`; `t = 0` is treated as 1.
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Self::Constant(rate) => rate,
            Self::InverseT { scale, cap } => (scale / t.max(1) as f64).min(cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixer::geo_predict;
    use crate::rng::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use std::vec::Vec;

    fn model(side: usize, base: usize, layers: &[usize], m: usize, seed: u64) -> GlnModel {
        let cfg = GlnConfig::new(side, base, layers.to_vec()).with_context_dim(m);
        GlnModel::new(cfg, &mut seeded_rng(seed)).unwrap()
    }

    fn random_input(rng: &mut impl Rng, side: usize, base: usize) -> (Vec<f64>, Vec<f64>) {
        let z = (0..side).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = (0..base - 1).map(|_| rng.random_range(0.01..0.99)).collect();
        (z, p)
    }

    #[test]
    fn init_is_uniform_average() {
        let m = model(4, 5, &[3, 1], 2, 0);
        for n in &m.layers()[0] {
            assert!(n.weights().iter().all(|&w| w == 0.2));
        }
        for n in &m.layers()[1] {
            assert!(n.weights().iter().all(|&w| w == 0.25));
        }
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(model(6, 4, &[5, 3, 1], 3, 17), model(6, 4, &[5, 3, 1], 3, 17));
        assert_ne!(model(6, 4, &[5, 3, 1], 3, 17), model(6, 4, &[5, 3, 1], 3, 18));
    }

    #[test]
    fn init_rejects_bad_configs() {
        let mut rng = seeded_rng(0);
        let bad = [
            GlnConfig::new(2, 3, vec![2, 1]).with_beta(0.5),
            GlnConfig::new(2, 3, vec![]),
            GlnConfig::new(2, 3, vec![2, 2]),
            GlnConfig::new(2, 3, vec![0, 1]),
            GlnConfig::new(2, 0, vec![1]),
            GlnConfig::new(2, 3, vec![1]).with_epsilon(0.5),
            GlnConfig::new(2, 3, vec![1]).with_clip_radius(1.0),
            GlnConfig::new(0, 3, vec![1]).with_context_dim(1),
            GlnConfig::new(2, 3, vec![1]).with_context_dim(25),
        ];
        for cfg in bad {
            assert!(GlnModel::new(cfg.clone(), &mut rng).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn base_layer_examples() {
        let s = FeatureScaler::uniform(3, 0.0, 10.0, 0.01).unwrap();
        let p0 = base_layer(&[0.0, 5.0, 11.0], &s, DEFAULT_BETA).unwrap();
        assert_eq!(p0.len(), 4);
        assert_eq!(p0[0], DEFAULT_BETA);
        assert!((p0[1] - 0.01).abs() < 1e-15);
        assert!((p0[2] - 0.5).abs() < 1e-15);
        assert_eq!(p0[3], 0.99);
        assert!(s.squash(&[1.0]).is_err());
    }

    #[test]
    fn fresh_first_layer_outputs_sigmoid_of_mean_logit() {
        let k0 = 7;
        let m = model(3, k0, &[4, 1], 2, 1);
        let (_, acts) = m.forward(&[0.3, -1.0, 2.0], &[0.5; 6]).unwrap();
        let expected = sigmoid(1.0 / k0 as f64);
        for &p in &acts.layer(1)[1..] {
            assert!((p - expected).abs() < 1e-12);
        }
        assert_eq!(acts.num_layers(), 3);
    }

    #[test]
    fn ungated_single_neuron_is_clipped_geo_predict() {
        let mut cfg = GlnConfig::new(2, 4, vec![1]);
        cfg.epsilon = 0.05;
        let mut m = GlnModel::new(cfg, &mut seeded_rng(0)).unwrap();
        m.layers_mut()[0][0].row_mut(0).copy_from_slice(&[0.3, 4.0, 2.0, -1.0]);
        let p = [0.9, 0.7, 0.2];
        let mut full = vec![DEFAULT_BETA];
        full.extend_from_slice(&p);
        let expected = clip_probability(geo_predict(&[0.3, 4.0, 2.0, -1.0], &full).unwrap(), 0.05);
        assert_eq!(m.predict(&[0.0, 0.0], &p).unwrap(), expected);
        assert_eq!(expected, 0.95);
    }

    #[test]
    fn forward_and_predict_agree() {
        let m = model(5, 6, &[8, 4, 1], 3, 4);
        let mut rng = seeded_rng(40);
        for _ in 0..50 {
            let (z, p) = random_input(&mut rng, 5, 6);
            let (out, acts) = m.forward(&z, &p).unwrap();
            assert_eq!(out, m.predict(&z, &p).unwrap());
            assert_eq!(out, acts.output());
        }
    }

    #[test]
    fn pattern_paths_match_direct_paths() {
        let mut a = model(5, 6, &[8, 4, 1], 3, 4);
        let mut b = a.clone();
        let mut rng = seeded_rng(41);
        for _ in 0..50 {
            let (z, p) = random_input(&mut rng, 5, 6);
            let pattern = a.context_pattern(&z).unwrap();
            assert_eq!(a.predict(&z, &p).unwrap(), b.predict_with_pattern(&pattern, &p).unwrap());
            let x = rng.random();
            let pa = a.predict_and_update(&z, &p, x, 0.1).unwrap();
            let pb = b.update_with_pattern(&pattern, &p, x, 0.1).unwrap();
            assert_eq!(pa, pb);
        }
        assert_eq!(a, b);
        let zs: Vec<Vec<f64>> = (0..20).map(|_| random_input(&mut rng, 5, 6).0).collect();
        let batch = a.context_patterns(&zs).unwrap();
        for (z, pat) in zs.iter().zip(&batch) {
            assert_eq!(&a.context_pattern(z).unwrap(), pat);
        }
        assert!(a.context_patterns(&[vec![0.0; 4]]).is_err());
        assert!(a.predict_with_pattern(&ContextPattern(vec![0; 3]), &[0.5; 5]).is_err());
        assert!(a.predict_with_pattern(&ContextPattern(vec![8; 13]), &[0.5; 5]).is_err());
    }

    #[test]
    fn forward_validates_inputs() {
        let m = model(2, 3, &[2, 1], 1, 0);
        assert!(matches!(m.forward(&[0.0], &[0.5, 0.5]), Err(GlnError::DimensionMismatch { .. })));
        assert!(matches!(m.forward(&[0.0, 0.0], &[0.5]), Err(GlnError::DimensionMismatch { .. })));
        assert!(matches!(m.forward(&[0.0, 0.0], &[0.5, 0.001]), Err(GlnError::ProbabilityDomain(_))));
    }

    #[test]
    fn update_rejects_bad_rates() {
        let mut m = model(2, 3, &[1], 0, 0);
        for lr in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                m.predict_and_update(&[0.0, 0.0], &[0.5, 0.5], true, lr),
                Err(GlnError::InvalidLearningRate(_))
            ));
        }
    }

    #[test]
    fn repeated_positive_example_raises_prediction() {
        let mut m = model(3, 4, &[5, 3, 1], 2, 9);
        let (z, p) = (vec![0.1, 0.4, -0.3], vec![0.3, 0.6, 0.8]);
        let first = m.predict_and_update(&z, &p, true, 1e-3).unwrap();
        let second = m.predict_and_update(&z, &p, true, 1e-3).unwrap();
        assert!(second >= first);
    }

    #[test]
    fn neutral_inputs_leave_first_layer_unchanged() {
        // logit(0.5) = 0 freezes every first-layer weight except the bias slot's.
        let mut m = model(2, 4, &[2, 1], 1, 3);
        let before = m.clone();
        m.predict_and_update(&[0.5, -0.5], &[0.5, 0.5, 0.5], true, 0.1).unwrap();
        for (a, b) in m.layers()[0].iter().zip(&before.layers()[0]) {
            for c in 0..a.num_contexts() {
                assert_eq!(&a.row(c)[1..], &b.row(c)[1..]);
            }
        }
    }

    #[test]
    fn saturated_weight_stays_at_radius() {
        let mut m = model(1, 2, &[1], 0, 0);
        m.layers_mut()[0][0].row_mut(0).copy_from_slice(&[0.0, DEFAULT_CLIP_RADIUS]);
        // input logit > 0 and target 1: the gradient pushes the weight up.
        m.predict_and_update(&[0.0], &[0.8], true, 0.5).unwrap();
        assert_eq!(m.layers()[0][0].row(0)[1], DEFAULT_CLIP_RADIUS);
    }

    #[test]
    fn schedule_examples() {
        let s = LearningRate::from_name("mnist", 0.0, 0.0).unwrap();
        assert_eq!(s.at(1), 0.01);
        assert_eq!(s.at(10_000), 0.01);
        assert!((s.at(1_000_000) - 1e-4).abs() < 1e-18);
        assert_eq!(LearningRate::from_name("inverse_t", 2.0, 0.1).unwrap().at(40), 0.05);
        assert_eq!(LearningRate::from_name("constant", 0.3, 0.0).unwrap().at(99), 0.3);
        assert!(matches!(LearningRate::from_name("adam", 1.0, 0.1), Err(GlnError::UnknownSchedule(_))));
        assert!(LearningRate::from_name("constant", 1.5, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn update_touches_only_active_rows(seed in any::<u64>(), x in any::<bool>()) {
            let mut m = model(4, 5, &[6, 3, 1], 3, seed);
            let mut rng = seeded_rng(seed ^ 0xABCD);
            // Move weights off their uniform init so unchanged rows are meaningful.
            for _ in 0..20 {
                let (z, p) = random_input(&mut rng, 4, 5);
                m.predict_and_update(&z, &p, rng.random(), 0.05).unwrap();
            }
            let before = m.clone();
            let (z, p) = random_input(&mut rng, 4, 5);
            m.predict_and_update(&z, &p, x, 0.05).unwrap();
            for (la, lb) in m.layers().iter().zip(before.layers()) {
                for (a, b) in la.iter().zip(lb) {
                    let active = b.context_index(&z).unwrap();
                    for c in 0..a.num_contexts() {
                        if c != active {
                            prop_assert_eq!(a.row(c), b.row(c));
                        }
                    }
                }
            }
        }

        #[test]
        fn weights_and_activations_stay_bounded(seed in any::<u64>()) {
            let cfg = GlnConfig::new(3, 4, vec![4, 2, 1]).with_context_dim(2).with_clip_radius(1.5);
            let mut m = GlnModel::new(cfg, &mut seeded_rng(seed)).unwrap();
            let mut rng = seeded_rng(!seed);
            for _ in 0..200 {
                let (z, p) = random_input(&mut rng, 3, 4);
                let out = m.predict_and_update(&z, &p, rng.random(), 0.9).unwrap();
                prop_assert!((0.01..=0.99).contains(&out));
            }
            for n in m.layers().iter().flatten() {
                prop_assert!(n.weights().iter().all(|w| w.abs() <= 1.5));
            }
            let (z, p) = random_input(&mut rng, 3, 4);
            let (_, acts) = m.forward(&z, &p).unwrap();
            for i in 0..acts.num_layers() {
                prop_assert!(acts.layer(i).iter().all(|q| (0.01..=0.99).contains(q)));
            }
        }

        #[test]
        fn each_neuron_loss_does_not_increase(seed in any::<u64>(), x in any::<bool>()) {
            let mut m = model(3, 5, &[4, 3, 1], 2, seed);
            let mut rng = seeded_rng(seed.wrapping_add(1));
            for _ in 0..10 {
                let (z, p) = random_input(&mut rng, 3, 5);
                m.predict_and_update(&z, &p, rng.random(), 0.05).unwrap();
            }
            let (z, p) = random_input(&mut rng, 3, 5);
            let (_, acts) = m.forward(&z, &p).unwrap();
            let before = m.clone();
            m.predict_and_update(&z, &p, x, 1e-3).unwrap();
            let target = if x { 1.0 } else { 0.0 };
            for (i, (la, lb)) in m.layers().iter().zip(before.layers()).enumerate() {
                // Inputs frozen at the pre-update activations of layer i.
                let inputs = acts.layer(i);
                for (a, b) in la.iter().zip(lb) {
                    let c = b.context_index(&z).unwrap();
                    let loss = |w: &[f64]| {
                        let q = geo_predict(w, inputs).unwrap();
                        -(target * q.ln() + (1.0 - target) * (1.0 - q).ln())
                    };
                    prop_assert!(loss(a.row(c)) <= loss(b.row(c)) + 1e-9);
                }
            }
        }
    }
}
