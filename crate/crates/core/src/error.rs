use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid policy parameters: {0}")]
    InvalidParams(String),

    #[error("task parameter outside skill domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("skill has no exemplars")]
    EmptySkill,

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("duplicate task parameter in training exemplars: {0:?}")]
    DuplicateTask(Vec<f64>),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("axis `{0}` mentioned more than once")]
    ConflictingClause(String),

    #[error("embedding value {0} is not on the magnitude grid")]
    UnrenderableMagnitude(f64),

    #[error("model was trained for axis config {model} / skill {model_skill}, caller has {caller} / {caller_skill}")]
    StaleConfig {
        model: String,
        model_skill: String,
        caller: String,
        caller_skill: String,
    },

    #[error("schema version {found} not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("kernel matrix is singular")]
    SingularKernel,

    #[error("timed out waiting for feedback")]
    FeedbackTimeout,

    #[error("skill pre-training reached {succeeded} of {attempted} goals, below the required {required:.0}%")]
    PretrainFailed { succeeded: usize, attempted: usize, required: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
