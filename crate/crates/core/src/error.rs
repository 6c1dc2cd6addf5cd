use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("panel entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("panel has T = {t} observations; at least 2 are required")]
    TooShort { t: usize },

    #[error("panel is empty")]
    Empty,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("eigenvalue iteration did not converge at index {index}")]
    EigenFailure { index: usize },

    #[error("rescaling tail is empty: k = {k} exceeds N = {n}")]
    EmptyTail { k: usize, n: usize },

    #[error("rescaler must be positive, got {value:e}")]
    NonPositiveRescaler { value: f64 },

    #[error("the ln ln T multiplier requires T >= 16, got T = {t}")]
    SampleTooShortForLogLog { t: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("factor count r = {r} exceeds min(N, T) = {bound}")]
    Dimension { r: usize, bound: usize },

    #[error("non-positive value {value} at ({row}, {col}); logarithmic slope is undefined")]
    NonPositive { row: usize, col: usize, value: f64 },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("parse error at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },

    #[error("ragged input: row {row} has {found} fields, expected {expected}")]
    Shape { row: usize, expected: usize, found: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("replication {replication} (seed {seed}) failed: {source}")]
    Replication {
        replication: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by unreadable or unwritable files rather than by
    /// invalid inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Replication { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
