use std::path::PathBuf;

use crate::model::ClassLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures decoding one of the binary containers (`EPO1`, `REC1`, `MDL1`).
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {found} (expected {expected})")]
    VersionMismatch { expected: u16, found: u16 },
    #[error("truncated payload: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("shape inconsistency: {0}")]
    ShapeMismatch(String),
    #[error("malformed field: {0}")]
    Malformed(String),
}

impl FormatError {
    /// Stable numeric code for each failure class.
    pub fn code(&self) -> u8 {
        match self {
            FormatError::BadMagic { .. } => 1,
            FormatError::VersionMismatch { .. } => 2,
            FormatError::Truncated { .. } => 3,
            FormatError::ShapeMismatch(_) => 4,
            FormatError::Malformed(_) => 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("zero total variance in window")]
    ZeroVariance,
    #[error("only one class present ({0:?}); two are required")]
    SingleClass(ClassLabel),
    #[error("class {class:?} has {count} epochs, at least {required} required")]
    TooFewEpochs {
        class: ClassLabel,
        count: usize,
        required: usize,
    },
    #[error("class {0:?} is absent from the epoch set")]
    MissingClass(ClassLabel),
    #[error("only {available} eligible no-braking windows, {requested} requested (short by {})", requested - available)]
    InsufficientWindows { requested: usize, available: usize },
    #[error("recording has {samples} samples, shorter than the {taps}-tap filter")]
    RecordingTooShort { samples: usize, taps: usize },
    #[error("window [{start_ms}, {end_ms}) ms lies outside the epoch [{epoch_start_ms}, {epoch_end_ms}) ms")]
    WindowOutOfBounds {
        start_ms: f64,
        end_ms: f64,
        epoch_start_ms: f64,
        epoch_end_ms: f64,
    },
    #[error("unmatched brake events: {0}")]
    UnmatchedEvents(String),
    #[error("unknown channel label {0:?}")]
    UnknownChannel(String),
    #[error("training diverged: {0}")]
    NonFiniteLoss(String),
    #[error("geometric mean did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerics rather than inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSpd(_)
                | Error::NonFinite(_)
                | Error::ZeroVariance
                | Error::NonFiniteLoss(_)
                | Error::NoConvergence { .. }
        )
    }
}
