//! Single-pass classification of a CSV dataset over random train/test splits.

use gln_core::{derive_seed, seeded_rng, FeatureScaler, OneVsAll};
use rand::seq::SliceRandom;

use super::{mean, ova_predict, ova_train};
use crate::config::{BaseMapKind, ExperimentConfig};
use crate::data::{streams, BaseMap, InputEncoder};
use crate::error::{HarnessError, Result};
use crate::metrics::MetricsLog;
use crate::tabular::Table;

#[derive(Debug, Clone)]
pub struct UciReport {
    pub accuracies: Vec<f64>,
}

impl UciReport {
    pub fn mean(&self) -> f64 {
        mean(&self.accuracies)
    }

    /// Standard error of the mean over splits.
    pub fn stderr(&self) -> f64 {
        let n = self.accuracies.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let m = self.mean();
        let var = self.accuracies.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Encoder fitted on the training rows: per-feature standardization for side
/// information, declared or observed ranges for base predictions.
pub fn fit_encoder(table: &Table, rows: &[usize], kind: BaseMapKind, epsilon: f64) -> Result<InputEncoder> {
    let d = table.dim();
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    let mut ranges = Vec::with_capacity(d);
    for f in 0..d {
        let col = rows.iter().map(|&r| table.features[r][f]);
        means[f] = col.clone().sum::<f64>() / n;
        stds[f] = (col.clone().map(|v| (v - means[f]) * (v - means[f])).sum::<f64>() / n).sqrt();
        ranges.push(
            table.ranges[f]
                .unwrap_or_else(|| col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))),
        );
    }
    let base = match kind {
        BaseMapKind::Affine => BaseMap::Affine(FeatureScaler::new(ranges, epsilon)?),
        BaseMapKind::Logistic => BaseMap::Logistic { epsilon },
    };
    Ok(InputEncoder::new(means, stds, base))
}

pub fn run_uci(cfg: &ExperimentConfig, table: &Table, log: &mut MetricsLog) -> Result<UciReport> {
    if table.len() < 2 {
        return Err(HarnessError::Config("dataset needs at least two rows".into()));
    }
    let lr = cfg.learning_rate()?;
    let n_train = ((table.len() as f64 * cfg.train_fraction).round() as usize).clamp(1, table.len() - 1);
    let split_stream = derive_seed(cfg.seed, streams::SPLIT);
    let mut accuracies = Vec::with_capacity(cfg.splits);
    for s in 0..cfg.splits {
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.shuffle(&mut seeded_rng(derive_seed(split_stream, s as u64)));
        let (train, test) = order.split_at(n_train);
        let encoder = fit_encoder(table, train, cfg.base_map, cfg.epsilon)?;
        let gln = cfg.gln_config(table.dim(), table.dim());
        let mut ova = OneVsAll::new(gln, table.num_classes(), derive_seed(cfg.seed, streams::RUN + s as u64))?;
        for (i, &row) in train.iter().enumerate() {
            let (z, p) = encoder.encode(&table.features[row])?;
            ova_train(&mut ova, &z, &p, table.labels[row], lr.at(i as u64 + 1), cfg.parallel)?;
        }
        let mut correct = 0usize;
        for &row in test {
            let (z, p) = encoder.encode(&table.features[row])?;
            correct += usize::from(ova_predict(&ova, &z, &p, cfg.parallel)? == table.labels[row]);
        }
        let acc = correct as f64 / test.len() as f64;
        log.emit(&cfg.run_id(), s as u64, "accuracy", acc)?;
        accuracies.push(acc);
    }
    let report = UciReport { accuracies };
    log.emit(&cfg.run_id(), cfg.splits as u64, "mean_accuracy", report.mean())?;
    Ok(report)
}
