//! Data ingestion, model files, metrics and experiment runners for
//! [`gln_core`].
//!
//! - [`idx`]: MNIST IDX parsing.
//! - [`deskew`]: moment-based deskewing.
//! - [`data`]: image sets, permutations and input encoding.
//! - [`tabular`]: CSV datasets with a TOML schema.
//! - [`model_file`]: the versioned binary model container.
//! - [`config`]: flat TOML experiment configs.
//! - [`metrics`]: line-delimited JSON metrics.
//! - [`export`]: PGM and CSV export.
//! - [`runners`]: the experiments.

pub mod config;
pub mod data;
pub mod deskew;
pub mod error;
pub mod export;
pub mod idx;
pub mod metrics;
pub mod model_file;
pub mod runners;
pub mod tabular;

pub use crate::config::{Experiment, ExperimentConfig};
pub use crate::error::{HarnessError, Result};
pub use crate::metrics::{MetricsLog, MetricsRecord};
pub use crate::model_file::ModelFile;
