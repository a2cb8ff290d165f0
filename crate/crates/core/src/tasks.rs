//! Task wrappers built from binary GLNs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GlnError, Result};
use crate::mixer::DEFAULT_EPSILON;
use crate::network::{ContextPattern, GlnConfig, GlnModel, DEFAULT_BETA, DEFAULT_CLIP_RADIUS};
use crate::rng::{derive_seed, seeded_rng};

/// Index of the largest probability, ties going to the lowest index.
pub fn argmax_lowest(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// One binary GLN per class; class `j` learns "label == j".
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsAll {
    models: Vec<GlnModel>,
}

impl OneVsAll {
    /// Class `j` draws its gates from `seeded_rng(derive_seed(master_seed, j))`.
    pub fn new(config: GlnConfig, classes: usize, master_seed: u64) -> Result<Self> {
        if classes == 0 {
            return Err(GlnError::InvalidArchitecture("one-vs-all needs at least one class"));
        }
        let models = (0..classes)
            .map(|j| GlnModel::new(config.clone(), &mut seeded_rng(derive_seed(master_seed, j as u64))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }

    /// Wraps existing class models; they must share one config.
    pub fn from_models(models: Vec<GlnModel>) -> Result<Self> {
        let first = models.first().ok_or(GlnError::InvalidArchitecture("one-vs-all needs at least one class"))?;
        if models.iter().any(|m| m.config() != first.config()) {
            return Err(GlnError::ArchitectureMismatch);
        }
        Ok(Self { models })
    }

    pub fn num_classes(&self) -> usize {
        self.models.len()
    }

    pub fn config(&self) -> &GlnConfig {
        self.models[0].config()
    }

    pub fn models(&self) -> &[GlnModel] {
        &self.models
    }

    /// Class models are independent; callers may update them in parallel.
    pub fn models_mut(&mut self) -> &mut [GlnModel] {
        &mut self.models
    }

    pub fn into_models(self) -> Vec<GlnModel> {
        self.models
    }

    /// Predicted label and the unnormalized per-class probabilities.
    pub fn predict(&self, z: &[f64], p_base: &[f64]) -> Result<(usize, Vec<f64>)> {
        let probs = self.models.iter().map(|m| m.predict(z, p_base)).collect::<Result<Vec<_>>>()?;
        Ok((argmax_lowest(&probs), probs))
    }

    /// Trains every class model on the example; returns their pre-update
    /// probabilities.
    pub fn update(&mut self, z: &[f64], p_base: &[f64], label: usize, learning_rate: f64) -> Result<Vec<f64>> {
        if label >= self.models.len() {
            return Err(GlnError::LabelOutOfRange { label, classes: self.models.len() });
        }
        if !(learning_rate > 0.0 && learning_rate < 1.0) {
            return Err(GlnError::InvalidLearningRate(learning_rate));
        }
        self.models
            .iter_mut()
            .enumerate()
            .map(|(j, m)| m.predict_and_update(z, p_base, j == label, learning_rate))
            .collect()
    }

    /// Active contexts of every class model for `z`.
    pub fn context_patterns(&self, z: &[f64]) -> Result<Vec<ContextPattern>> {
        self.models.iter().map(|m| m.context_pattern(z)).collect()
    }

    /// Patterns for a batch of inputs, indexed `[input][class]`.
    pub fn context_patterns_batch<Z: AsRef<[f64]>>(&self, zs: &[Z]) -> Result<Vec<Vec<ContextPattern>>> {
        let mut out: Vec<Vec<ContextPattern>> = (0..zs.len()).map(|_| Vec::with_capacity(self.models.len())).collect();
        for m in &self.models {
            for (row, pat) in out.iter_mut().zip(m.context_patterns(zs)?) {
                row.push(pat);
            }
        }
        Ok(out)
    }

    /// [`predict`](Self::predict) from precomputed patterns.
    pub fn predict_with_patterns(&self, patterns: &[ContextPattern], p_base: &[f64]) -> Result<(usize, Vec<f64>)> {
        self.check_patterns(patterns)?;
        let probs = self
            .models
            .iter()
            .zip(patterns)
            .map(|(m, c)| m.predict_with_pattern(c, p_base))
            .collect::<Result<Vec<_>>>()?;
        Ok((argmax_lowest(&probs), probs))
    }

    /// [`update`](Self::update) from precomputed patterns.
    pub fn update_with_patterns(
        &mut self,
        patterns: &[ContextPattern],
        p_base: &[f64],
        label: usize,
        learning_rate: f64,
    ) -> Result<Vec<f64>> {
        self.check_patterns(patterns)?;
        if label >= self.models.len() {
            return Err(GlnError::LabelOutOfRange { label, classes: self.models.len() });
        }
        self.models
            .iter_mut()
            .zip(patterns)
            .enumerate()
            .map(|(j, (m, c))| m.update_with_pattern(c, p_base, j == label, learning_rate))
            .collect()
    }

    fn check_patterns(&self, patterns: &[ContextPattern]) -> Result<()> {
        if patterns.len() != self.models.len() {
            return Err(GlnError::DimensionMismatch { expected: self.models.len(), actual: patterns.len() });
        }
        Ok(())
    }
}

/// Architecture shared by all per-pixel models of a density model.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelModelSpec {
    pub layer_sizes: Vec<usize>,
    pub context_dim: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub clip_radius: f64,
}

impl Default for PixelModelSpec {
    fn default() -> Self {
        Self {
            layer_sizes: vec![8, 1],
            context_dim: 2,
            epsilon: DEFAULT_EPSILON,
            beta: DEFAULT_BETA,
            clip_radius: DEFAULT_CLIP_RADIUS,
        }
    }
}

impl PixelModelSpec {
    /// Config of pixel `index` in an image of `num_pixels` pixels.
    pub fn config(&self, num_pixels: usize, index: usize) -> GlnConfig {
        GlnConfig {
            side_dim: num_pixels,
            base_dim: index + 1,
            layer_sizes: self.layer_sizes.clone(),
            context_dim: self.context_dim,
            epsilon: self.epsilon,
            beta: self.beta,
            clip_radius: self.clip_radius,
        }
    }
}

/// Autoregressive model of binary images: pixel `i` (row-major) is predicted
/// by its own GLN from the pixels before it.
///
/// Pixel `i`'s side information is the full-length vector whose first `i`
/// entries hold the visible pixels mapped `0 -> eps`, `1 -> 1 - eps` and whose
/// remaining entries hold 0.5. Its base predictions are those first `i`
/// entries, so its layer 0 has width `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoregressiveDensity {
    models: Vec<GlnModel>,
    epsilon: f64,
}

impl AutoregressiveDensity {
    /// Pixel `i` draws its gates from `seeded_rng(derive_seed(master_seed, i))`.
    pub fn new(num_pixels: usize, spec: &PixelModelSpec, master_seed: u64) -> Result<Self> {
        if num_pixels == 0 {
            return Err(GlnError::InvalidArchitecture("density model needs at least one pixel"));
        }
        let models = (0..num_pixels)
            .map(|i| GlnModel::new(spec.config(num_pixels, i), &mut seeded_rng(derive_seed(master_seed, i as u64))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models, epsilon: spec.epsilon })
    }

    pub fn from_models(models: Vec<GlnModel>) -> Result<Self> {
        let d = models.len();
        let epsilon = models
            .first()
            .ok_or(GlnError::InvalidArchitecture("density model needs at least one pixel"))?
            .config()
            .epsilon;
        for (i, m) in models.iter().enumerate() {
            let c = m.config();
            if c.side_dim != d || c.base_dim != i + 1 || c.epsilon != epsilon {
                return Err(GlnError::ArchitectureMismatch);
            }
        }
        Ok(Self { models, epsilon })
    }

    pub fn num_pixels(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[GlnModel] {
        &self.models
    }

    fn check_len(&self, image: &[bool]) -> Result<()> {
        if image.len() != self.models.len() {
            return Err(GlnError::DimensionMismatch { expected: self.models.len(), actual: image.len() });
        }
        Ok(())
    }

    fn visible(&self, bit: bool) -> f64 {
        if bit {
            1.0 - self.epsilon
        } else {
            self.epsilon
        }
    }

    /// `P(x_i = 1 | x_<i)` for every pixel, with the model frozen.
    pub fn conditionals(&self, image: &[bool]) -> Result<Vec<f64>> {
        self.check_len(image)?;
        let mut z = vec![0.5; image.len()];
        let mut out = Vec::with_capacity(image.len());
        for (i, m) in self.models.iter().enumerate() {
            out.push(m.predict(&z, &z[..i])?);
            z[i] = self.visible(image[i]);
        }
        Ok(out)
    }

    /// `sum_i ln P(x_i | x_<i)` in nats, with the model frozen.
    pub fn log_prob(&self, image: &[bool]) -> Result<f64> {
        Ok(self.conditionals(image)?.iter().zip(image).map(|(&p, &x)| log_bernoulli(p, x)).sum())
    }

    /// Like [`log_prob`](Self::log_prob), but each pixel model also takes one
    /// learning step on its pixel during the same pass. The returned value uses
    /// the pre-update predictions.
    pub fn log_prob_and_update(&mut self, image: &[bool], learning_rate: f64) -> Result<f64> {
        self.check_len(image)?;
        if !(learning_rate > 0.0 && learning_rate < 1.0) {
            return Err(GlnError::InvalidLearningRate(learning_rate));
        }
        let mut z = vec![0.5; image.len()];
        let mut total = 0.0;
        for i in 0..self.models.len() {
            let (visible, _) = z.split_at(i);
            let visible = visible.to_vec();
            let p = self.models[i].predict_and_update(&z, &visible, image[i], learning_rate)?;
            total += log_bernoulli(p, image[i]);
            z[i] = self.visible(image[i]);
        }
        Ok(total)
    }

    /// Mean negative log-likelihood over `images`, model frozen.
    pub fn nats_per_image(&self, images: &[Vec<bool>]) -> Result<f64> {
        if images.is_empty() {
            return Err(GlnError::EmptyDataset);
        }
        let mut total = 0.0;
        for img in images {
            total -= self.log_prob(img)?;
        }
        Ok(total / images.len() as f64)
    }
}

/// Online per-pixel Bernoulli model with the Krichevsky-Trofimov estimator
/// `(ones + 1/2) / (n + 1)`, ignoring all other pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentBernoulli {
    ones: Vec<u64>,
    seen: u64,
}

impl IndependentBernoulli {
    pub fn new(num_pixels: usize) -> Self {
        Self { ones: vec![0; num_pixels], seen: 0 }
    }

    pub fn probability(&self, pixel: usize) -> f64 {
        (self.ones[pixel] as f64 + 0.5) / (self.seen as f64 + 1.0)
    }

    pub fn log_prob(&self, image: &[bool]) -> Result<f64> {
        if image.len() != self.ones.len() {
            return Err(GlnError::DimensionMismatch { expected: self.ones.len(), actual: image.len() });
        }
        Ok(image.iter().enumerate().map(|(i, &x)| log_bernoulli(self.probability(i), x)).sum())
    }

    pub fn update(&mut self, image: &[bool]) -> Result<()> {
        if image.len() != self.ones.len() {
            return Err(GlnError::DimensionMismatch { expected: self.ones.len(), actual: image.len() });
        }
        for (count, &x) in self.ones.iter_mut().zip(image) {
            *count += u64::from(x);
        }
        self.seen += 1;
        Ok(())
    }

    pub fn log_prob_and_update(&mut self, image: &[bool]) -> Result<f64> {
        let lp = self.log_prob(image)?;
        self.update(image)?;
        Ok(lp)
    }
}

fn log_bernoulli(p: f64, x: bool) -> f64 {
    if x {
        libm::log(p)
    } else {
        libm::log1p(-p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixer::sigmoid;
    use crate::network::LearningRate;
    use proptest::prelude::*;
    use rand::Rng;
    use std::vec::Vec;

    #[test]
    fn one_vs_all_pattern_path_matches_direct_path() {
        let cfg = GlnConfig::new(3, 4, vec![4, 1]).with_context_dim(2);
        let mut a = OneVsAll::new(cfg, 3, 8).unwrap();
        let mut b = a.clone();
        let mut rng = seeded_rng(9);
        for _ in 0..40 {
            let z: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..0.9)).collect();
            let label = rng.random_range(0..3);
            let pats = b.context_patterns(&z).unwrap();
            assert_eq!(a.predict(&z, &p).unwrap(), b.predict_with_patterns(&pats, &p).unwrap());
            assert_eq!(a.update(&z, &p, label, 0.05).unwrap(), b.update_with_patterns(&pats, &p, label, 0.05).unwrap());
        }
        assert_eq!(a, b);
        let zs = [vec![0.1, 0.2, -0.3], vec![-1.0, 0.5, 0.0]];
        let batch = a.context_patterns_batch(&zs).unwrap();
        assert_eq!(batch[1], a.context_patterns(&zs[1]).unwrap());
        assert!(b.predict_with_patterns(&[], &[0.5; 3]).is_err());
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_lowest(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax_lowest(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax_lowest(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn fresh_classifier_with_shared_gates_is_symmetric() {
        let cfg = GlnConfig::new(4, 5, vec![3, 1]).with_context_dim(2);
        let model = GlnModel::new(cfg, &mut seeded_rng(1)).unwrap();
        let clf = OneVsAll::from_models(vec![model; 3]).unwrap();
        let (label, probs) = clf.predict(&[0.1, 0.2, -0.3, 0.0], &[0.5; 4]).unwrap();
        assert_eq!(label, 0);
        assert!(probs.iter().all(|&p| p == probs[0]));
    }

    #[test]
    fn update_assigns_one_vs_all_targets() {
        let cfg = GlnConfig::new(2, 3, vec![1]);
        let mut clf = OneVsAll::new(cfg, 2, 5).unwrap();
        let (z, p) = ([0.0, 0.0], [0.8, 0.3]);
        let before = clf.predict(&z, &p).unwrap().1;
        clf.update(&z, &p, 1, 0.1).unwrap();
        let after = clf.predict(&z, &p).unwrap().1;
        assert!(after[0] < before[0], "class 0 was told x = 0");
        assert!(after[1] > before[1], "class 1 was told x = 1");
    }

    #[test]
    fn repeated_label_is_non_decreasing() {
        let cfg = GlnConfig::new(3, 4, vec![4, 1]).with_context_dim(2);
        let mut clf = OneVsAll::new(cfg, 3, 9).unwrap();
        let (z, p) = ([0.4, -1.0, 0.2], [0.2, 0.9, 0.6]);
        let mut last = 0.0;
        for _ in 0..10 {
            let probs = clf.update(&z, &p, 1, 0.01).unwrap();
            assert!(probs[1] >= last);
            last = probs[1];
        }
    }

    #[test]
    fn update_validates_label_and_rate() {
        let mut clf = OneVsAll::new(GlnConfig::new(1, 2, vec![1]), 2, 0).unwrap();
        let before = clf.clone();
        assert!(matches!(clf.update(&[0.0], &[0.5], 2, 0.1), Err(GlnError::LabelOutOfRange { .. })));
        assert!(matches!(clf.update(&[0.0], &[0.5], 0, 0.0), Err(GlnError::InvalidLearningRate(_))));
        assert_eq!(clf, before);
    }

    #[test]
    fn class_models_get_distinct_gates() {
        let clf = OneVsAll::new(GlnConfig::new(3, 2, vec![1]).with_context_dim(2), 2, 0).unwrap();
        assert_ne!(clf.models()[0], clf.models()[1]);
        assert!(OneVsAll::from_models(vec![]).is_err());
    }

    #[test]
    fn single_pixel_chain() {
        let spec = PixelModelSpec { layer_sizes: vec![1], ..PixelModelSpec::default() };
        let dm = AutoregressiveDensity::new(1, &spec, 0).unwrap();
        let lp = dm.log_prob(&[true]).unwrap();
        assert!((lp - libm::log(sigmoid(1.0))).abs() < 1e-12, "{lp}");
        assert!((lp + 0.313_261_687_518_222_8).abs() < 1e-12);
    }

    #[test]
    fn log_prob_checks_length() {
        let dm = AutoregressiveDensity::new(3, &PixelModelSpec::default(), 0).unwrap();
        assert!(matches!(dm.log_prob(&[true]), Err(GlnError::DimensionMismatch { .. })));
        assert!(matches!(dm.nats_per_image(&[]), Err(GlnError::EmptyDataset)));
    }

    #[test]
    fn half_probability_models_give_uniform_density() {
        // Zero weights make every pixel model predict exactly 1/2.
        let spec = PixelModelSpec::default();
        let mut dm = AutoregressiveDensity::new(6, &spec, 0).unwrap();
        for m in &mut dm.models {
            for n in m.layers_mut().iter_mut().flatten() {
                for c in 0..n.num_contexts() {
                    n.row_mut(c).fill(0.0);
                }
            }
        }
        let lp = dm.log_prob(&[true, false, true, true, false, false]).unwrap();
        assert!((lp + 6.0 * core::f64::consts::LN_2).abs() < 1e-12);
    }

    fn trained_density(d: usize, seed: u64) -> AutoregressiveDensity {
        let spec = PixelModelSpec { layer_sizes: vec![4, 1], context_dim: 2, ..PixelModelSpec::default() };
        let mut dm = AutoregressiveDensity::new(d, &spec, seed).unwrap();
        let mut rng = seeded_rng(seed + 1);
        let lr = LearningRate::InverseT { scale: 1.0, cap: 0.2 };
        for t in 1..=50 {
            let img: Vec<bool> = (0..d).map(|_| rng.random_bool(0.3)).collect();
            dm.log_prob_and_update(&img, lr.at(t)).unwrap();
        }
        dm
    }

    #[test]
    fn density_sums_to_one_over_all_images() {
        let d = 8;
        let dm = trained_density(d, 3);
        let total: f64 = (0..1u32 << d)
            .map(|bits| {
                let img: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
                dm.log_prob(&img).unwrap().exp()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn online_log_prob_matches_frozen_before_update() {
        let mut dm = trained_density(6, 8);
        let img = [true, false, false, true, true, false];
        let frozen = dm.log_prob(&img).unwrap();
        let online = dm.log_prob_and_update(&img, 0.05).unwrap();
        // Pixel i's prediction only depends on models <= i, none of which were
        // updated before they predicted.
        assert_eq!(frozen, online);
        assert_ne!(frozen, dm.log_prob(&img).unwrap());
    }

    #[test]
    fn bernoulli_baseline_uses_kt_counts() {
        let mut b = IndependentBernoulli::new(2);
        assert!((b.log_prob(&[true, false]).unwrap() - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        b.update(&[true, true]).unwrap();
        assert!((b.probability(0) - 0.75).abs() < 1e-15);
        let lp = b.log_prob_and_update(&[true, false]).unwrap();
        assert!((lp - (0.75f64.ln() + 0.25f64.ln())).abs() < 1e-15);
        assert!((b.probability(1) - 1.5 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn later_pixels_do_not_affect_earlier_conditionals(seed in any::<u64>(), j in 0usize..7) {
            let dm = trained_density(7, seed % 1000);
            let mut rng = seeded_rng(seed);
            let img: Vec<bool> = (0..7).map(|_| rng.random()).collect();
            let mut flipped = img.clone();
            flipped[j] = !flipped[j];
            let a = dm.conditionals(&img).unwrap();
            let b = dm.conditionals(&flipped).unwrap();
            prop_assert_eq!(&a[..=j], &b[..=j]);
        }

        #[test]
        fn argmax_invariant_under_monotone_transform(probs in prop::collection::vec(0.01f64..0.99, 1..12)) {
            let transformed: Vec<f64> = probs.iter().map(|p| (3.0 * p).exp() - 1.0).collect();
            prop_assert_eq!(argmax_lowest(&probs), argmax_lowest(&transformed));
        }

        #[test]
        fn image_probability_in_unit_interval(seed in any::<u64>()) {
            let dm = trained_density(5, seed % 100);
            let mut rng = seeded_rng(seed);
            let img: Vec<bool> = (0..5).map(|_| rng.random()).collect();
            let p = dm.log_prob(&img).unwrap().exp();
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }
}
