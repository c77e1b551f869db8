use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of a line-delimited input could not be parsed.
    #[error("{source_name}:{line}: malformed record: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: duplicate doc_id {doc_id:?}")]
    DuplicateDocId {
        source_name: String,
        line: usize,
        doc_id: String,
    },

    #[error("{source_name}:{line}: duplicate concept_id {concept_id:?}")]
    DuplicateConceptId {
        source_name: String,
        line: usize,
        concept_id: String,
    },

    #[error("{source_name}:{line}: concept {concept_id:?} has an empty title")]
    EmptyTitle {
        source_name: String,
        line: usize,
        concept_id: String,
    },

    /// An annotation record references an id that is not loaded.
    #[error("{source_name}:{line}: unresolved annotation record: {message}")]
    UnresolvedAnnotation {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("unknown doc_id {0:?}")]
    UnknownDoc(String),

    #[error("unknown concept_id {0:?}")]
    UnknownConcept(String),

    #[error("empty query")]
    EmptyQuery,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("empty parameter grid")]
    EmptyGrid,

    #[error("cross-validation needs at least 2 topics, got {0}")]
    TooFewTopics(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
