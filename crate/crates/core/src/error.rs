use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state left the state set at step {step}: {state:?}")]
    StateEscape { step: usize, state: Vec<f64> },

    #[error("trajectory `{trajectory}` does not satisfy the tail assumption required by {variant}")]
    TailAssumption { trajectory: String, variant: String },

    #[error("trajectory `{trajectory}` carries no compact-tail epsilon")]
    MissingEpsilon { trajectory: String },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("cell index {index:?} out of range for grid {counts:?}")]
    CellOutOfRange { index: Vec<usize>, counts: Vec<usize> },

    #[error("controller set is empty on cell {cell:?}")]
    EmptyControllerSet { cell: Vec<usize> },

    #[error("solver stalled after {iterations} iterations: {detail}")]
    SolverStall { iterations: usize, detail: String },

    #[error("certificate rejected: {0}")]
    Rejected(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
