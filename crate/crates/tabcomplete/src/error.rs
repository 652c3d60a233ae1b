use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{what} vocabulary fingerprint {found:016x} does not match {expected:016x}")]
    VocabMismatch { what: &'static str, expected: u64, found: u64 },
    #[error("unsupported model format version {0}")]
    ModelVersion(u32),
    #[error("missing setting: {0}")]
    Missing(&'static str),
    #[error("no connecting chain within length {0}")]
    NoConnectingChain(usize),
    #[error(transparent)]
    Core(#[from] tabcomplete_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }
}
