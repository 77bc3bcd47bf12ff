use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("truncated data: need {expected} bytes, file has {found}")]
    TruncatedData { expected: u64, found: u64 },

    #[error("empty directory: {}", .0.display())]
    EmptyDirectory(PathBuf),

    #[error("unreadable image {}: {reason}", path.display())]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("malformed json in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing counterpart for {0}")]
    MissingPair(String),

    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no overlap between fixed and moving volumes")]
    NoOverlap,

    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty slice range: {0}")]
    EmptyRange(String),

    #[error("render failure: {0}")]
    Render(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for I/O and format faults, 1 for domain and
    /// invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::UnsupportedFormat(_)
            | Error::CorruptHeader(_)
            | Error::TruncatedData { .. }
            | Error::EmptyDirectory(_)
            | Error::UnreadableImage { .. }
            | Error::Json { .. }
            | Error::MissingPair(_) => 2,
            _ => 1,
        }
    }
}
