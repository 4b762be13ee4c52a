use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("unknown vertex kind `{token}` at line {line}")]
    UnknownVertexKind { line: usize, token: String },

    #[error("non-monotonic sequence number at line {line}: {seq} follows {previous}")]
    NonMonotonicSeq { line: usize, previous: u64, seq: u64 },

    #[error("i/o failure on {path:?}: {source}")]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: std::io::Error,
    },

    #[error("window size already declared ({0} edges)")]
    ObserveAfterDeclaration(usize),

    #[error("insufficient edges: window needs {needed}, stream has {available}")]
    InsufficientEdges { needed: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("back-off mass overflow: epsilon {epsilon} x {absent} absent labels >= 1")]
    EpsilonMassOverflow { epsilon: f64, absent: usize },

    #[error("distributions are defined over different supports")]
    SupportMismatch,

    #[error("invalid K={k} for {points} points")]
    InvalidK { k: usize, points: usize },

    #[error("every cluster is a singleton; no model can be formed")]
    AllSingletons,

    #[error("model file version mismatch: {0}")]
    VersionMismatch(String),

    #[error("model file is corrupt: {0}")]
    CorruptModel(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("revision requires at least one confirmed vector")]
    EmptyRevision,

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: Some(path.into()),
            source,
        }
    }

    /// Data errors (bad input files, unusable data) as opposed to usage or
    /// configuration errors. Drives the CLI exit code.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidParameter(_) | Error::Config(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }
}
