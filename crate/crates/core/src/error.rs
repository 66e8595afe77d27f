use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("truncated payload in frame {frame}: expected {expected} bytes, found {found}")]
    Truncated {
        frame: usize,
        expected: usize,
        found: usize,
    },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("size mismatch: {len} bytes is not a multiple of the {frame_size}-byte frame (remainder {remainder})")]
    SizeMismatch {
        len: usize,
        frame_size: usize,
        remainder: usize,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("validation error in `{entry}`: {message}")]
    Validation { entry: String, message: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("frame too small: {width}x{height}, minimum is {min_width}x{min_height}")]
    FrameTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("weight map is not normalized: sum is {0}")]
    Normalization(f64),

    #[error("insufficient frames: need at least {needed}, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("flow provider: no flow for frame {index} at {}", path.display())]
    Provider { index: usize, path: PathBuf },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row error at line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by reading or decoding inputs, as opposed to
    /// failures of the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Truncated { .. }
                | Error::Unsupported(_)
                | Error::SizeMismatch { .. }
                | Error::Format(_)
                | Error::Validation { .. }
                | Error::Provider { .. }
                | Error::Schema(_)
                | Error::Row { .. }
                | Error::File { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
