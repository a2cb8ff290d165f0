//! Experiment runners. Each takes a config and a metrics log, emits records
//! as it goes and returns a typed report.

pub mod capacity;
pub mod cells;
pub mod density;
pub mod forgetting;
pub mod mnist;
pub mod saliency;
pub mod uci;

use std::fs;
use std::path::PathBuf;

use gln_core::tasks::argmax_lowest;
use gln_core::{ContextPattern, GlnError, OneVsAll};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::{ImageSet, InputEncoder};
use crate::error::{io_err, Result};

/// Trains every class model on one example; returns the pre-update predicted
/// label. With `parallel` the class models are updated concurrently, which
/// gives the same result because they share no state.
pub fn ova_train(ova: &mut OneVsAll, z: &[f64], p: &[f64], label: usize, lr: f64, parallel: bool) -> Result<usize> {
    let probs = if parallel {
        check_label(ova, label)?;
        ova.models_mut()
            .par_iter_mut()
            .enumerate()
            .map(|(j, m)| m.predict_and_update(z, p, j == label, lr))
            .collect::<std::result::Result<Vec<_>, _>>()?
    } else {
        ova.update(z, p, label, lr)?
    };
    Ok(argmax_lowest(&probs))
}

pub fn ova_predict(ova: &OneVsAll, z: &[f64], p: &[f64], parallel: bool) -> Result<usize> {
    if parallel {
        let probs = ova.models().par_iter().map(|m| m.predict(z, p)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(argmax_lowest(&probs))
    } else {
        Ok(ova.predict(z, p)?.0)
    }
}

/// [`ova_train`] with precomputed context patterns.
pub fn ova_train_patterns(
    ova: &mut OneVsAll,
    patterns: &[ContextPattern],
    p: &[f64],
    label: usize,
    lr: f64,
    parallel: bool,
) -> Result<usize> {
    let probs = if parallel {
        check_label(ova, label)?;
        ova.models_mut()
            .par_iter_mut()
            .zip(patterns)
            .enumerate()
            .map(|(j, (m, c))| m.update_with_pattern(c, p, j == label, lr))
            .collect::<std::result::Result<Vec<_>, _>>()?
    } else {
        ova.update_with_patterns(patterns, p, label, lr)?
    };
    Ok(argmax_lowest(&probs))
}

/// Inputs per block when context patterns are computed in batches.
pub const BLOCK: usize = 64;

/// Patterns for a batch of inputs, indexed `[input][class]`.
pub fn ova_patterns<Z: AsRef<[f64]> + Sync>(
    ova: &OneVsAll,
    zs: &[Z],
    parallel: bool,
) -> Result<Vec<Vec<ContextPattern>>> {
    if !parallel {
        return Ok(ova.context_patterns_batch(zs)?);
    }
    let per_class =
        ova.models().par_iter().map(|m| m.context_patterns(zs)).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut out: Vec<Vec<ContextPattern>> = (0..zs.len()).map(|_| Vec::with_capacity(per_class.len())).collect();
    for class in per_class {
        for (row, pat) in out.iter_mut().zip(class) {
            row.push(pat);
        }
    }
    Ok(out)
}

fn check_label(ova: &OneVsAll, label: usize) -> Result<()> {
    if label >= ova.num_classes() {
        return Err(GlnError::LabelOutOfRange { label, classes: ova.num_classes() }.into());
    }
    Ok(())
}

/// Frozen accuracy of `ova` on `set`.
pub fn image_accuracy(ova: &OneVsAll, encoder: &InputEncoder, set: &ImageSet, parallel: bool) -> Result<f64> {
    if set.is_empty() {
        return Ok(f64::NAN);
    }
    let mut correct = 0usize;
    for start in (0..set.len()).step_by(BLOCK) {
        let block: Vec<usize> = (start..(start + BLOCK).min(set.len())).collect();
        let encoded = block.iter().map(|&i| encoder.encode(set.image(i))).collect::<Result<Vec<_>>>()?;
        let zs: Vec<&[f64]> = encoded.iter().map(|(z, _)| z.as_slice()).collect();
        let patterns = ova_patterns(ova, &zs, parallel)?;
        for ((&i, (_, p)), pats) in block.iter().zip(&encoded).zip(&patterns) {
            correct += usize::from(ova_predict_patterns(ova, pats, p)? == set.label(i));
        }
    }
    Ok(correct as f64 / set.len() as f64)
}

/// Creates the output directory if one is configured and returns it.
pub(crate) fn out_dir(cfg: &ExperimentConfig) -> Result<Option<PathBuf>> {
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn ova_predict_patterns(ova: &OneVsAll, patterns: &[ContextPattern], p: &[f64]) -> Result<usize> {
    Ok(ova.predict_with_patterns(patterns, p)?.0)
}
