use alloc::string::String;

pub type Result<T> = core::result::Result<T, GlnError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GlnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A probability reached a place that needs it strictly inside (0, 1), or
    /// inside the model's clip bounds.
    #[error("probability {0} outside its admissible range")]
    ProbabilityDomain(f64),

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(&'static str),

    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("learning rate {0} outside the open interval (0, 1)")]
    InvalidLearningRate(f64),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("unknown learning-rate schedule `{0}`")]
    UnknownSchedule(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("models do not share one architecture")]
    ArchitectureMismatch,
}
