use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate object group `{0}`")]
    DuplicateGroup(String),
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("duplicate label `{label}` in object group `{group}`")]
    DuplicateLabel { group: String, label: String },
    #[error("unknown object group `{0}`")]
    UnknownGroup(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown node `{label}` in object group `{group}`")]
    UnknownNode { group: String, label: String },
    #[error("relation `{relation}` references index {index} outside object group `{group}` (size {size})")]
    DanglingEndpoint {
        relation: String,
        group: String,
        index: u32,
        size: usize,
    },
    #[error("meta-path is empty")]
    EmptyMetaPath,
    #[error(
        "meta-path does not compose at step {step} (`{relation}`): expected source group `{expected}`, found `{found}`"
    )]
    Composition {
        step: usize,
        relation: String,
        expected: String,
        found: String,
    },
    #[error("invalid meta-path notation `{0}`")]
    MetaPathSyntax(String),
    #[error("node index {index} is not in object group `{group}` (size {size})")]
    NodeOutOfRange {
        group: String,
        index: usize,
        size: usize,
    },
    #[error("object group `{0}` is empty")]
    EmptyGroup(String),
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("relation `{0}` carries no rating values")]
    MissingPayload(String),
    #[error("relation `{relation}` has {count} edges; at least 2 are needed")]
    TooFewEdges { relation: String, count: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: rating {value} outside 1..=5")]
    RatingOutOfRange {
        path: PathBuf,
        line: usize,
        value: i64,
    },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by how the
    /// library was called.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MissingFile(_)
                | Error::Parse { .. }
                | Error::RatingOutOfRange { .. }
                | Error::Snapshot(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::DuplicateLabel { .. }
                | Error::DanglingEndpoint { .. }
                | Error::Degenerate(_)
                | Error::TooFewEdges { .. }
                | Error::MissingPayload(_)
                | Error::EmptyGroup(_)
        )
    }
}
