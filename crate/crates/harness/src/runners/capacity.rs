//! Memorization of label-shuffled MNIST or uniform noise over several epochs.

use gln_core::{derive_seed, ContextPattern, OneVsAll};

use super::mnist::CLASSES;
use super::{mean, ova_patterns, ova_predict_patterns, ova_train_patterns, BLOCK};
use crate::config::{CapacityMode, ExperimentConfig};
use crate::data::{streams, ImageSet, InputEncoder, MnistFiles};
use crate::error::Result;
use crate::metrics::MetricsLog;

#[derive(Debug, Clone)]
pub struct CapacityReport {
    /// Swept context dimensions, in config order.
    pub context_dims: Vec<usize>,
    /// `final_accuracy[k][r]`: training accuracy after the last epoch for
    /// context dimension `context_dims[k]` in run `r`.
    pub final_accuracy: Vec<Vec<f64>>,
}

impl CapacityReport {
    /// Run-averaged final training accuracy per context dimension.
    pub fn mean_accuracy(&self) -> Vec<f64> {
        self.final_accuracy.iter().map(|runs| mean(runs)).collect()
    }
}

/// The dataset of run `run`: the first `train_size` training images with
/// shuffled labels, or noise images of the same shape.
pub fn capacity_data(cfg: &ExperimentConfig, train: &ImageSet, run_seed: u64) -> ImageSet {
    let base = train.head(cfg.train_size);
    match cfg.capacity_mode {
        CapacityMode::Shuffled => base.with_shuffled_labels(run_seed),
        CapacityMode::Noise => base.uniform_noise_like(run_seed),
    }
}

pub fn run_capacity(cfg: &ExperimentConfig, log: &mut MetricsLog) -> Result<CapacityReport> {
    let lr = cfg.learning_rate()?;
    let train = MnistFiles::new(cfg.mnist_dir()).train()?;
    let mut final_accuracy = vec![Vec::with_capacity(cfg.runs); cfg.context_dims.len()];
    for r in 0..cfg.runs {
        let run_seed = derive_seed(cfg.seed, streams::RUN + r as u64);
        let data = capacity_data(cfg, &train, run_seed);
        let encoder = InputEncoder::for_images(&data, cfg.base_map, cfg.epsilon)?;
        let mut bases = Vec::with_capacity(data.len());
        let mut sides = Vec::with_capacity(data.len());
        for i in 0..data.len() {
            let (z, p) = encoder.encode(data.image(i))?;
            sides.push(z);
            bases.push(p);
        }
        for (k, &m) in cfg.context_dims.iter().enumerate() {
            let run = format!("{}-m{m}-run{r}", cfg.run_id());
            let gln = cfg.gln_config(data.dim(), data.dim()).with_context_dim(m);
            let mut ova = OneVsAll::new(gln, CLASSES, run_seed)?;
            let mut patterns: Vec<Vec<ContextPattern>> = Vec::with_capacity(sides.len());
            for block in sides.chunks(BLOCK) {
                patterns.extend(ova_patterns(&ova, block, cfg.parallel)?);
            }
            let mut t = 0u64;
            let mut acc = f64::NAN;
            for epoch in 1..=cfg.epochs {
                for i in 0..data.len() {
                    t += 1;
                    ova_train_patterns(&mut ova, &patterns[i], &bases[i], data.label(i), lr.at(t), cfg.parallel)?;
                }
                if epoch.is_multiple_of(cfg.eval_every) || epoch == cfg.epochs {
                    let mut correct = 0usize;
                    for i in 0..data.len() {
                        correct += usize::from(ova_predict_patterns(&ova, &patterns[i], &bases[i])? == data.label(i));
                    }
                    acc = correct as f64 / data.len() as f64;
                    log.emit(&run, epoch as u64, "train_accuracy", acc)?;
                }
            }
            final_accuracy[k].push(acc);
        }
    }
    for (k, &m) in cfg.context_dims.iter().enumerate() {
        log.emit(
            &format!("{}-m{m}", cfg.run_id()),
            cfg.epochs as u64,
            "mean_train_accuracy",
            mean(&final_accuracy[k]),
        )?;
    }
    Ok(CapacityReport { context_dims: cfg.context_dims.clone(), final_accuracy })
}
