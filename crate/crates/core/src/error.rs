use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid moment order {order} for fragment length {length}")]
    InvalidOrder { order: usize, length: usize },
    #[error("invalid fragment length {0}: need at least 2 samples")]
    InvalidLength(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid layer spec: {0}")]
    LayerSpec(String),
    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("degenerate normalization range: min = max = {0}")]
    DegenerateRange(f64),
    #[error("reference signal is all zeros; SNR/PRD undefined")]
    UndefinedReference,
    #[error("cannot parse {token:?} at row {row}, column {col}")]
    Ingest {
        row: usize,
        col: usize,
        token: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
