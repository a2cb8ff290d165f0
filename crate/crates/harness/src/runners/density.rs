//! Autoregressive density model on binarized MNIST crops.
//!
//! The training images are streamed with learning. At the test split the model
//! is snapshotted: the snapshot gives the frozen test loss, while the live
//! model keeps learning through the test images for the online test loss. An
//! independent per-pixel Bernoulli model follows the same protocol as the
//! baseline.

use gln_core::{AutoregressiveDensity, IndependentBernoulli};

use crate::config::ExperimentConfig;
use crate::data::MnistFiles;
use crate::error::{HarnessError, Result};
use crate::metrics::MetricsLog;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub pixels: usize,
    pub gln_online: f64,
    pub gln_frozen: f64,
    pub bernoulli_online: f64,
    pub bernoulli_frozen: f64,
    /// `pixels * ln 2`.
    pub uniform: f64,
}

pub type BinaryImage = Vec<bool>;

/// Binarized, cropped training and test images.
pub fn density_data(cfg: &ExperimentConfig) -> Result<(Vec<BinaryImage>, Vec<BinaryImage>)> {
    let files = MnistFiles::new(cfg.mnist_dir());
    let prep = |set: crate::data::ImageSet, n: usize| {
        let set = set.head(n);
        let set = if cfg.crop > 0 && cfg.crop < set.rows { set.center_crop(cfg.crop) } else { set };
        set.binarize(cfg.binarize_threshold)
    };
    Ok((prep(files.train()?, cfg.train_size), prep(files.test()?, cfg.test_size)))
}

pub fn run_density(cfg: &ExperimentConfig, log: &mut MetricsLog) -> Result<DensityReport> {
    let (train, test) = density_data(cfg)?;
    run_density_on(cfg, &train, &test, log)
}

pub fn run_density_on(
    cfg: &ExperimentConfig,
    train: &[Vec<bool>],
    test: &[Vec<bool>],
    log: &mut MetricsLog,
) -> Result<DensityReport> {
    if test.is_empty() {
        return Err(HarnessError::Config("density needs test images".into()));
    }
    let pixels = test[0].len();
    let lr = cfg.learning_rate()?;
    let run = cfg.run_id();
    let mut gln = AutoregressiveDensity::new(pixels, &cfg.pixel_spec(), cfg.seed)?;
    let mut bern = IndependentBernoulli::new(pixels);
    let (mut gln_sum, mut bern_sum) = (0.0, 0.0);
    let mut t = 0u64;
    for img in train {
        t += 1;
        gln_sum -= gln.log_prob_and_update(img, lr.at(t))?;
        bern_sum -= bern.log_prob_and_update(img)?;
        if t.is_multiple_of(cfg.report_every as u64) {
            log.emit(&format!("{run}-gln"), t, "train_nats_per_image", gln_sum / t as f64)?;
            log.emit(&format!("{run}-bernoulli"), t, "train_nats_per_image", bern_sum / t as f64)?;
        }
    }
    let gln_frozen = gln.nats_per_image(test)?;
    let mut bern_frozen = 0.0;
    for img in test {
        bern_frozen -= bern.log_prob(img)?;
    }
    let bern_frozen = bern_frozen / test.len() as f64;

    let (mut gln_online, mut bern_online) = (0.0, 0.0);
    for img in test {
        t += 1;
        gln_online -= gln.log_prob_and_update(img, lr.at(t))?;
        bern_online -= bern.log_prob_and_update(img)?;
    }
    let n = test.len() as f64;
    let report = DensityReport {
        pixels,
        gln_online: gln_online / n,
        gln_frozen,
        bernoulli_online: bern_online / n,
        bernoulli_frozen: bern_frozen,
        uniform: pixels as f64 * std::f64::consts::LN_2,
    };
    let step = train.len() as u64;
    log.emit(&format!("{run}-gln-online"), step, "nats_per_image", report.gln_online)?;
    log.emit(&format!("{run}-gln-frozen"), step, "nats_per_image", report.gln_frozen)?;
    log.emit(&format!("{run}-bernoulli-online"), step, "nats_per_image", report.bernoulli_online)?;
    log.emit(&format!("{run}-bernoulli-frozen"), step, "nats_per_image", report.bernoulli_frozen)?;
    log.emit(&format!("{run}-uniform"), step, "nats_per_image", report.uniform)?;
    Ok(report)
}
