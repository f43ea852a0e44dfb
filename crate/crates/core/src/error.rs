use thiserror::Error;

/// Errors raised anywhere in the calculus, connection and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain needs at least one lattice or continuous direction")]
    NoDirections,
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("empty extent in lattice direction {0}")]
    EmptyExtent(usize),
    #[error("invalid continuous range in direction {dir}: {reason}")]
    BadRange { dir: usize, reason: String },
    #[error("non-positive spacing {h} in continuous direction {dir}")]
    NonPositiveSpacing { dir: usize, h: f64 },
    #[error("{kind} direction {dir} out of range (have {count})")]
    DirectionOutOfRange {
        kind: &'static str,
        dir: usize,
        count: usize,
    },
    #[error("empty valid region: {0}")]
    EmptyRegion(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("no partial rule for continuous direction {0}")]
    MissingPartialRule(usize),
    #[error("too few samples ({count}) in continuous direction {dir}; need at least 3")]
    TooFewSamples { dir: usize, count: usize },
    #[error("point {0} lies outside the valid region")]
    OutsideRegion(String),
    #[error("continuous coordinate {x} is not a grid node in direction {dir}")]
    OffGrid { dir: usize, x: f64 },
    #[error("non-finite value at {0}")]
    NonFinite(String),
    #[error("form is not closed: defect {defect:e} exceeds {tolerance:e}")]
    NotClosed { defect: f64, tolerance: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
