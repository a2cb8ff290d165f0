//! Calibration within context cells on a synthetic one-dimensional task.
//!
//! Side information is a scalar `u ~ U(-a, a)`, the base prediction is `u`
//! squashed from `[-a, a]`, and the target is `Bernoulli(f(u))` with
//! `f(u) = 0.5 + 0.35 sin(2.5 u)`. After training, fresh samples are grouped by
//! the output neuron's active context and the cell's mean prediction is
//! compared with the cell's mean target.

use gln_core::{derive_seed, seeded_rng, FeatureScaler, GlnModel};
use rand::Rng;

use crate::config::ExperimentConfig;
use crate::data::streams;
use crate::error::Result;
use crate::metrics::MetricsLog;

pub fn target_probability(u: f64) -> f64 {
    0.5 + 0.35 * (2.5 * u).sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStat {
    pub context: usize,
    pub count: usize,
    pub mean_prediction: f64,
    pub mean_target: f64,
}

#[derive(Debug, Clone)]
pub struct CellsReport {
    pub cells: Vec<CellStat>,
    pub model: GlnModel,
}

impl CellsReport {
    /// Largest `|mean_prediction - mean_target|` over cells with at least
    /// `min_count` evaluation samples.
    pub fn max_deviation(&self, min_count: usize) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.count >= min_count)
            .map(|c| (c.mean_prediction - c.mean_target).abs())
            .fold(0.0, f64::max)
    }
}

pub fn run_cells(cfg: &ExperimentConfig, log: &mut MetricsLog) -> Result<CellsReport> {
    let a = cfg.cells_range;
    let lr = cfg.learning_rate()?;
    let scaler = FeatureScaler::uniform(1, -a, a, cfg.epsilon)?;
    let mut model = GlnModel::new(cfg.gln_config(1, 1), &mut seeded_rng(cfg.seed))?;
    let mut rng = seeded_rng(derive_seed(cfg.seed, streams::SYNTHETIC));
    let run = cfg.run_id();
    let mut loss = 0.0;
    for t in 1..=cfg.train_size as u64 {
        let u = rng.random_range(-a..a);
        let x = rng.random_bool(target_probability(u));
        let p = model.predict_and_update(&[u], &scaler.squash(&[u])?, x, lr.at(t))?;
        loss -= if x { p.ln() } else { (1.0 - p).ln() };
        if t.is_multiple_of(cfg.report_every as u64) {
            log.emit(&run, t, "log_loss", loss / cfg.report_every as f64)?;
            loss = 0.0;
        }
    }
    let top = &model.layers()[model.layers().len() - 1][0];
    let mut sums = vec![(0usize, 0.0, 0.0); top.num_contexts()];
    for _ in 0..cfg.eval_size {
        let u = rng.random_range(-a..a);
        let x = rng.random_bool(target_probability(u));
        let p = model.predict(&[u], &scaler.squash(&[u])?)?;
        let cell = &mut sums[top.context_index(&[u])?];
        cell.0 += 1;
        cell.1 += p;
        cell.2 += f64::from(u8::from(x));
    }
    let cells: Vec<CellStat> = sums
        .iter()
        .enumerate()
        .filter(|(_, s)| s.0 > 0)
        .map(|(c, &(n, sp, sx))| CellStat {
            context: c,
            count: n,
            mean_prediction: sp / n as f64,
            mean_target: sx / n as f64,
        })
        .collect();
    for c in &cells {
        log.emit(
            &format!("{run}-cell{}", c.context),
            cfg.train_size as u64,
            "cell_gap",
            c.mean_prediction - c.mean_target,
        )?;
    }
    Ok(CellsReport { cells, model })
}
