use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty fitting set")]
    EmptyFittingSet,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative concentration for {0}")]
    NegativeConcentration(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("zero sample count")]
    ZeroSamples,

    #[error("requested {requested} samples but only {available} are available")]
    InsufficientData { requested: usize, available: usize },

    #[error("not enough {class} samples for database {database}")]
    InsufficientClass { class: String, database: usize },

    #[error("empty data set")]
    EmptyData,

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("weak learner cannot beat 0.5 under current distribution")]
    WeakLearnerFailed,

    #[error("could not draw subsets covering two classes in {0} attempts")]
    SubsetCoverage(usize),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("label {label} outside label space of size {size}")]
    LabelOutOfRange { label: usize, size: usize },
}
