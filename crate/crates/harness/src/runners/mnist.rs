//! Single-pass one-vs-all MNIST classification.

use std::path::Path;

use gln_core::OneVsAll;

use super::{image_accuracy, out_dir, ova_patterns, ova_train_patterns, BLOCK};
use crate::config::ExperimentConfig;
use crate::data::{ImageSet, InputEncoder, MnistFiles};
use crate::error::{HarnessError, Result};
use crate::metrics::MetricsLog;
use crate::model_file::{checksum, ModelFile};

pub const CLASSES: usize = 10;

/// Training file, test file and the encoder fitted on the training file, all
/// deskewed when the config asks for it.
pub struct PreparedMnist {
    pub train: ImageSet,
    pub test: ImageSet,
    pub encoder: InputEncoder,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedMnist> {
    let files = MnistFiles::new(cfg.mnist_dir());
    let (mut train, mut test) = (files.train()?, files.test()?.head(cfg.test_size));
    if cfg.deskew {
        train = train.deskewed();
        test = test.deskewed();
    }
    let encoder = InputEncoder::for_images(&train, cfg.base_map, cfg.epsilon)?;
    Ok(PreparedMnist { train: train.head(cfg.train_size), test, encoder })
}

#[derive(Debug, Clone)]
pub struct MnistReport {
    /// Accuracy of the pre-update predictions during the training pass.
    pub online_accuracy: f64,
    /// Frozen accuracy on the test set after the pass.
    pub test_accuracy: f64,
    pub classifier: OneVsAll,
}

pub fn run_mnist(cfg: &ExperimentConfig, log: &mut MetricsLog) -> Result<MnistReport> {
    let data = prepare(cfg)?;
    train_and_test(cfg, &data, log)
}

/// One pass over `data.train`, then a frozen evaluation on `data.test`.
pub fn train_and_test(cfg: &ExperimentConfig, data: &PreparedMnist, log: &mut MetricsLog) -> Result<MnistReport> {
    let run = cfg.run_id();
    let lr = cfg.learning_rate()?;
    let dim = data.encoder.dim();
    let mut ova = OneVsAll::new(cfg.gln_config(dim, dim), CLASSES, cfg.seed)?;
    let mut correct = 0usize;
    let n = data.train.len();
    for start in (0..n).step_by(BLOCK) {
        let block = start..(start + BLOCK).min(n);
        let encoded = block.clone().map(|i| data.encoder.encode(data.train.image(i))).collect::<Result<Vec<_>>>()?;
        let zs: Vec<&[f64]> = encoded.iter().map(|(z, _)| z.as_slice()).collect();
        let patterns = ova_patterns(&ova, &zs, cfg.parallel)?;
        for ((i, (_, p)), pats) in block.zip(&encoded).zip(&patterns) {
            let t = i as u64 + 1;
            let label = data.train.label(i);
            correct += usize::from(ova_train_patterns(&mut ova, pats, p, label, lr.at(t), cfg.parallel)? == label);
            if t.is_multiple_of(cfg.report_every as u64) || i + 1 == n {
                log.emit(&run, t, "train_accuracy", correct as f64 / t as f64)?;
            }
        }
    }
    let seen = data.train.len();
    let online_accuracy = if seen > 0 { correct as f64 / seen as f64 } else { f64::NAN };
    let test_accuracy = image_accuracy(&ova, &data.encoder, &data.test, cfg.parallel)?;
    log.emit(&run, seen as u64, "accuracy", test_accuracy)?;
    if let Some(dir) = out_dir(cfg)? {
        ModelFile { seed: cfg.seed, models: ova.models().to_vec() }.save(&dir.join("model.gln"))?;
    }
    Ok(MnistReport { online_accuracy, test_accuracy, classifier: ova })
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub accuracy: f64,
    pub checksum_before: u64,
    pub checksum_after: u64,
}

/// Frozen evaluation of a saved classifier on the MNIST test set. The model
/// bytes are checksummed before and after to prove nothing was written.
pub fn run_eval(cfg: &ExperimentConfig, model_path: &Path, log: &mut MetricsLog) -> Result<EvalReport> {
    let file = ModelFile::load(model_path)?;
    let checksum_before = checksum(&file.to_bytes());
    let ova = OneVsAll::from_models(file.models)?;
    let data = prepare(cfg)?;
    if ova.config().side_dim != data.encoder.dim() {
        return Err(HarnessError::Config(format!(
            "model expects {} inputs, data has {}",
            ova.config().side_dim,
            data.encoder.dim()
        )));
    }
    let accuracy = image_accuracy(&ova, &data.encoder, &data.test, cfg.parallel)?;
    let checksum_after = checksum(&ModelFile { seed: file.seed, models: ova.into_models() }.to_bytes());
    let run = format!("eval-seed{}", file.seed);
    log.emit(&run, 0, "accuracy", accuracy)?;
    if checksum_before != checksum_after {
        return Err(HarnessError::Checksum { stored: checksum_before, computed: checksum_after });
    }
    Ok(EvalReport { accuracy, checksum_before, checksum_after })
}
