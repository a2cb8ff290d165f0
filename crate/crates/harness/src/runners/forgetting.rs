//! Sequential permuted-MNIST tasks with a retention matrix.
//!
//! The model sees one unbroken stream: task after task, with the learning-rate
//! step counter running across task boundaries. After each task it is frozen
//! and evaluated on the test split under every permutation seen so far.

use std::fmt::Write as _;

use gln_core::{derive_seed, ContextPattern, OneVsAll};

use super::mnist::CLASSES;
use super::{mean, out_dir, ova_patterns, ova_predict_patterns, ova_train_patterns, BLOCK};
use crate::config::ExperimentConfig;
use crate::data::{permute_task, streams, InputEncoder, MnistFiles};
use crate::error::Result;
use crate::export;
use crate::metrics::MetricsLog;

#[derive(Debug, Clone)]
pub struct ForgettingReport {
    /// `retention[r][i][j]`: run `r`, accuracy on task `j` after training
    /// through task `i`; defined for `j <= i`.
    pub retention: Vec<Vec<Vec<f64>>>,
}

impl ForgettingReport {
    /// Run-averaged `retention[i][j]`.
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        mean(&self.retention.iter().map(|m| m[i][j]).collect::<Vec<_>>())
    }
}

fn permute(values: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&k| values[k]).collect()
}

pub fn run_forgetting(cfg: &ExperimentConfig, log: &mut MetricsLog) -> Result<ForgettingReport> {
    let lr = cfg.learning_rate()?;
    let files = MnistFiles::new(cfg.mnist_dir());
    let (mut train, mut test) = (files.train()?, files.test()?.head(cfg.test_size));
    if cfg.deskew {
        train = train.deskewed();
        test = test.deskewed();
    }
    let encoder = InputEncoder::for_images(&train, cfg.base_map, cfg.epsilon)?;
    let train = train.head(cfg.train_size);
    let encode_all = |set: &crate::data::ImageSet| -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        (0..set.len()).map(|i| encoder.encode(set.image(i))).collect()
    };
    let train_enc = encode_all(&train)?;
    let test_enc = encode_all(&test)?;
    let dim = train.dim();

    let mut retention = Vec::with_capacity(cfg.runs);
    for r in 0..cfg.runs {
        let run_seed = derive_seed(cfg.seed, streams::RUN + r as u64);
        let run = format!("{}-run{r}", cfg.run_id());
        let mut ova = OneVsAll::new(cfg.gln_config(dim, dim), CLASSES, run_seed)?;
        let perms: Vec<Vec<usize>> = (0..cfg.tasks).map(|k| permute_task(run_seed, k as u64, dim)).collect();
        let mut test_patterns: Vec<Vec<Vec<ContextPattern>>> = Vec::new();
        let mut matrix = vec![vec![f64::NAN; cfg.tasks]; cfg.tasks];
        let mut t = 0u64;
        for task in 0..cfg.tasks {
            let perm = &perms[task];
            for (b, block) in train_enc.chunks(BLOCK).enumerate() {
                let zs: Vec<Vec<f64>> = block.iter().map(|(z, _)| permute(z, perm)).collect();
                let patterns = ova_patterns(&ova, &zs, cfg.parallel)?;
                for (k, ((_, p), pats)) in block.iter().zip(&patterns).enumerate() {
                    t += 1;
                    let label = train.label(b * BLOCK + k);
                    ova_train_patterns(&mut ova, pats, &permute(p, perm), label, lr.at(t), cfg.parallel)?;
                }
            }
            let mut task_patterns = Vec::with_capacity(test_enc.len());
            for block in test_enc.chunks(BLOCK) {
                let zs: Vec<Vec<f64>> = block.iter().map(|(z, _)| permute(z, perm)).collect();
                task_patterns.extend(ova_patterns(&ova, &zs, cfg.parallel)?);
            }
            test_patterns.push(task_patterns);
            for (j, patterns) in test_patterns.iter().enumerate() {
                let mut correct = 0usize;
                for (i, (_, p)) in test_enc.iter().enumerate() {
                    let guess = ova_predict_patterns(&ova, &patterns[i], &permute(p, &perms[j]))?;
                    correct += usize::from(guess == test.label(i));
                }
                let acc = correct as f64 / test.len() as f64;
                matrix[task][j] = acc;
                log.emit(&run, task as u64 + 1, &format!("retention[{}]", j + 1), acc)?;
            }
        }
        if let Some(dir) = out_dir(cfg)? {
            let mut csv = String::new();
            for row in &matrix {
                let cells: Vec<String> =
                    row.iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }).collect();
                writeln!(csv, "{}", cells.join(",")).expect("writing to a string");
            }
            export::write(&dir.join(format!("retention-run{r}.csv")), csv)?;
        }
        retention.push(matrix);
    }
    Ok(ForgettingReport { retention })
}
