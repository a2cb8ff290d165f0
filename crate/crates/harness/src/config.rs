//! Experiment configuration.
//!
//! A config file is flat TOML: one `key = value` line per field, no tables.
//! Every experiment starts from its own defaults and the file overrides any
//! subset of keys; unknown keys are an error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gln_core::{GlnConfig, LearningRate, PixelModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

/// Environment variable naming the MNIST directory when the config has none.
pub const MNIST_DIR_ENV: &str = "GLN_MNIST_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Mnist,
    Capacity,
    Forgetting,
    Density,
    Saliency,
    Uci,
    Cells,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mnist => "mnist",
            Experiment::Capacity => "capacity",
            Experiment::Forgetting => "forgetting",
            Experiment::Density => "density",
            Experiment::Saliency => "saliency",
            Experiment::Uci => "uci",
            Experiment::Cells => "cells",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMode {
    /// MNIST images with randomly permuted labels.
    Shuffled,
    /// Uniform noise images with the MNIST labels.
    Noise,
}

/// Base prediction encoding for image and tabular features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseMapKind {
    /// Logistic function of the standardized feature.
    Logistic,
    /// Affine map of the feature range.
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mnist_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    pub layer_sizes: Vec<usize>,
    pub context_dim: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub clip_radius: f64,
    pub base_map: BaseMapKind,

    /// `"mnist"`, `"inverse_t"` or `"constant"`.
    pub lr_schedule: String,
    pub lr_scale: f64,
    pub lr_cap: f64,

    pub deskew: bool,
    pub train_size: usize,
    pub test_size: usize,
    pub report_every: usize,
    pub parallel: bool,
    /// Adds elapsed seconds to every metrics record, which makes the output
    /// differ between otherwise identical runs.
    pub wall_clock: bool,

    /// Capacity: passes over the training set per run.
    pub epochs: usize,
    /// Capacity and forgetting: independent repetitions with derived seeds.
    pub runs: usize,
    /// Capacity: context dimensions swept; `context_dim` is ignored.
    pub context_dims: Vec<usize>,
    pub capacity_mode: CapacityMode,
    /// Capacity: frozen training accuracy is measured every this many epochs
    /// and after the last one.
    pub eval_every: usize,

    /// Forgetting: number of permuted tasks, the first being unpermuted.
    pub tasks: usize,

    /// Density: side of the centred square crop.
    pub crop: usize,
    pub binarize_threshold: f64,

    /// UCI: random train/test splits and the training fraction of each.
    pub splits: usize,
    pub train_fraction: f64,

    /// Saliency: number of test images whose maps are exported.
    pub saliency_examples: usize,

    /// Cells: side-information range, samples and evaluation sample count.
    pub cells_range: f64,
    pub eval_size: usize,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> ExperimentConfig {
        let base = ExperimentConfig {
            experiment,
            seed: 0,
            mnist_dir: None,
            data_csv: None,
            schema: None,
            model_path: None,
            out: None,
            layer_sizes: vec![128, 128, 1],
            context_dim: 4,
            epsilon: 1e-4,
            beta: gln_core::network::DEFAULT_BETA,
            clip_radius: gln_core::network::DEFAULT_CLIP_RADIUS,
            base_map: BaseMapKind::Logistic,
            lr_schedule: "mnist".into(),
            lr_scale: 100.0,
            lr_cap: 0.01,
            deskew: false,
            train_size: 60_000,
            test_size: 10_000,
            report_every: 10_000,
            parallel: false,
            wall_clock: false,
            epochs: 1,
            runs: 1,
            context_dims: vec![1, 2, 4],
            capacity_mode: CapacityMode::Shuffled,
            eval_every: 1,
            tasks: 4,
            crop: 14,
            binarize_threshold: 0.5,
            splits: 100,
            train_fraction: 0.8,
            saliency_examples: 10,
            cells_range: 2.0,
            eval_size: 100_000,
        };
        match experiment {
            Experiment::Mnist => ExperimentConfig { layer_sizes: vec![128, 1], deskew: true, ..base },
            Experiment::Capacity => ExperimentConfig {
                train_size: 1000,
                lr_schedule: "constant".into(),
                lr_scale: 1e-4,
                epochs: 20,
                runs: 3,
                eval_every: 5,
                ..base
            },
            Experiment::Forgetting => ExperimentConfig {
                layer_sizes: vec![100, 25, 1],
                context_dim: 6,
                lr_schedule: "constant".into(),
                lr_scale: 0.01,
                train_size: 10_000,
                runs: 3,
                ..base
            },
            Experiment::Density => ExperimentConfig {
                layer_sizes: vec![8, 1],
                context_dim: 2,
                epsilon: gln_core::mixer::DEFAULT_EPSILON,
                lr_schedule: "inverse_t".into(),
                lr_scale: 1.0,
                lr_cap: 0.05,
                train_size: 1000,
                test_size: 200,
                report_every: 100,
                ..base
            },
            Experiment::Saliency => ExperimentConfig {
                layer_sizes: vec![50, 25, 1],
                lr_schedule: "constant".into(),
                lr_scale: 0.01,
                ..base
            },
            Experiment::Uci => ExperimentConfig {
                layer_sizes: vec![1000, 500, 1],
                context_dim: 8,
                base_map: BaseMapKind::Affine,
                ..base
            },
            Experiment::Cells => ExperimentConfig {
                layer_sizes: vec![8, 4, 2, 1],
                context_dim: 1,
                epsilon: gln_core::mixer::DEFAULT_EPSILON,
                lr_schedule: "inverse_t".into(),
                lr_scale: 100.0,
                lr_cap: 0.05,
                train_size: 200_000,
                report_every: 20_000,
                ..base
            },
        }
    }

    /// Defaults for `experiment` overridden by the flat TOML in `text`.
    pub fn from_toml(experiment: Experiment, text: &str) -> Result<ExperimentConfig> {
        let overrides: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let mut table = toml::Table::try_from(ExperimentConfig::defaults(experiment))
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        for (key, value) in overrides {
            if value.is_table() {
                return Err(HarnessError::Config(format!("`{key}`: config files are flat, tables are not allowed")));
            }
            if key == "experiment" && value.as_str() != Some(experiment.name()) {
                return Err(HarnessError::Config(format!("config is for {value}, not {experiment}")));
            }
            table.insert(key, value);
        }
        let cfg: ExperimentConfig =
            table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(experiment: Experiment, path: Option<&Path>) -> Result<ExperimentConfig> {
        match path {
            Some(p) => ExperimentConfig::from_toml(experiment, &fs::read_to_string(p).map_err(io_err(p))?),
            None => Ok(ExperimentConfig::defaults(experiment)),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.learning_rate()?;
        let bad = |msg: &str| Err(HarnessError::Config(msg.into()));
        if self.report_every == 0 || self.eval_every == 0 {
            return bad("report_every and eval_every must be positive");
        }
        if self.experiment == Experiment::Forgetting && self.tasks < 2 {
            return bad("forgetting needs at least two tasks");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if self.runs == 0 {
            return bad("runs must be positive");
        }
        Ok(())
    }

    pub fn learning_rate(&self) -> Result<LearningRate> {
        Ok(LearningRate::from_name(&self.lr_schedule, self.lr_scale, self.lr_cap)?)
    }

    /// Network config for `side_dim` side-information features and `inputs`
    /// base predictions (the bias slot is added here).
    pub fn gln_config(&self, side_dim: usize, inputs: usize) -> GlnConfig {
        GlnConfig::new(side_dim, inputs + 1, self.layer_sizes.clone())
            .with_context_dim(self.context_dim)
            .with_epsilon(self.epsilon)
            .with_beta(self.beta)
            .with_clip_radius(self.clip_radius)
    }

    pub fn pixel_spec(&self) -> PixelModelSpec {
        PixelModelSpec {
            layer_sizes: self.layer_sizes.clone(),
            context_dim: self.context_dim,
            epsilon: self.epsilon,
            beta: self.beta,
            clip_radius: self.clip_radius,
        }
    }

    /// `mnist_dir`, else `$GLN_MNIST_DIR`, else `data/mnist`.
    pub fn mnist_dir(&self) -> PathBuf {
        self.mnist_dir
            .clone()
            .or_else(|| std::env::var_os(MNIST_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data/mnist"))
    }

    pub fn run_id(&self) -> String {
        format!("{}-seed{}", self.experiment, self.seed)
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Experiment> {
        toml::Value::String(s.into()).try_into().map_err(|_| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}
