use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("bad header: {0}")]
    BadHeader(String),

    #[error("ragged row at line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("invalid count {value:?} at line {line}, column {column}: counts must be nonnegative integers")]
    InvalidCount {
        line: u64,
        column: String,
        value: String,
    },

    #[error("duplicate process id {0:?}")]
    DuplicateId(String),

    #[error("unknown label token {token:?} at line {line}")]
    UnknownLabel { line: u64, token: String },

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("invalid system call name {0:?}")]
    InvalidCallName(String),

    #[error("duplicate system call {0:?} in vocabulary")]
    DuplicateCall(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dataset has {labels} labels for {processes} processes")]
    LabelCount { labels: usize, processes: usize },

    #[error("dataset is unlabeled")]
    MissingLabels,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("k exceeds dataset size: k = {k}, processes = {processes}")]
    KExceedsDataset { k: usize, processes: usize },

    #[error("invalid seed indices: {0}")]
    InvalidSeedIndices(String),

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("invalid model file: {0}")]
    InvalidModel(String),
}

impl Error {
    /// Stable machine-readable tag used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingFile { .. } => "missing-file",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::BadHeader(_) => "bad-header",
            Error::RaggedRow { .. } => "ragged-row",
            Error::InvalidCount { .. } => "invalid-count",
            Error::DuplicateId(_) => "duplicate-id",
            Error::UnknownLabel { .. } => "unknown-label",
            Error::EmptyVocabulary => "empty-vocabulary",
            Error::InvalidCallName(_) => "invalid-call-name",
            Error::DuplicateCall(_) => "duplicate-call",
            Error::VocabularyMismatch(_) => "vocabulary-mismatch",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::LabelCount { .. } => "label-count",
            Error::MissingLabels => "missing-labels",
            Error::EmptyDataset => "empty-dataset",
            Error::InvalidConfig(_) => "invalid-config",
            Error::KExceedsDataset { .. } => "k-exceeds-dataset",
            Error::InvalidSeedIndices(_) => "invalid-seed-indices",
            Error::IdMismatch(_) => "id-mismatch",
            Error::InvalidModel(_) => "invalid-model",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path }
        } else {
            Error::Io { path, source }
        }
    }
}
