//! Saliency maps of a one-vs-all MNIST classifier.

use gln_core::saliency;

use super::mnist::{prepare, train_and_test};
use super::out_dir;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::export::{grid_csv, signed_pgm_bytes, write};
use crate::metrics::MetricsLog;

#[derive(Debug, Clone)]
pub struct SaliencyReport {
    pub test_accuracy: f64,
    /// `maps[e][class]`: map of test image `e` under class model `class`, one
    /// value per pixel.
    pub maps: Vec<Vec<Vec<f64>>>,
    /// Fraction of maps whose defining forward pass saw no clipping.
    pub clip_clean_fraction: f64,
}

/// Trains for one pass, then collapses every class model on the first
/// `saliency_examples` test images. With an output directory, each map is
/// written as `saliency-<example>-class<k>.pgm` and `.csv`.
pub fn run_saliency(cfg: &ExperimentConfig, log: &mut MetricsLog) -> Result<SaliencyReport> {
    let data = prepare(cfg)?;
    let trained = train_and_test(cfg, &data, log)?;
    let dir = out_dir(cfg)?;
    let (rows, cols) = (data.test.rows, data.test.cols);
    let mut maps = Vec::new();
    let mut clean = 0usize;
    let mut total = 0usize;
    for e in 0..cfg.saliency_examples.min(data.test.len()) {
        let (z, p) = data.encoder.encode(data.test.image(e))?;
        let mut per_class = Vec::new();
        for (k, model) in trained.classifier.models().iter().enumerate() {
            let collapsed = gln_core::collapse(model, &z, &p)?;
            clean += usize::from(collapsed.clip_clean);
            total += 1;
            let map = saliency(model, &z, &p)?;
            if let Some(dir) = &dir {
                write(&dir.join(format!("saliency-{e}-class{k}.pgm")), signed_pgm_bytes(&map, rows, cols))?;
                write(&dir.join(format!("saliency-{e}-class{k}.csv")), grid_csv(&map, rows, cols))?;
            }
            per_class.push(map);
        }
        maps.push(per_class);
    }
    let clip_clean_fraction = if total > 0 { clean as f64 / total as f64 } else { f64::NAN };
    log.emit(&cfg.run_id(), data.train.len() as u64, "clip_clean_fraction", clip_clean_fraction)?;
    Ok(SaliencyReport { test_accuracy: trained.test_accuracy, maps, clip_clean_fraction })
}
