use std::path::PathBuf;

use thiserror::Error;

/// Every failure the pipeline can report. Display strings lead with the
/// variant name so command-line diagnostics stay greppable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptySignal: a power signal needs at least one sample")]
    EmptySignal,
    #[error("NonFiniteSample: sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("WidthTooSmall: matrix width {width} must be at least {min}")]
    WidthTooSmall { width: usize, min: usize },
    #[error("EmptyAfterTruncate: {len} samples do not fill one row of width {width}")]
    EmptyAfterTruncate { len: usize, width: usize },
    #[error("MatrixTooSmall: {rows}x{cols} matrix has no full {side}x{side} neighborhood")]
    MatrixTooSmall { rows: usize, cols: usize, side: usize },
    #[error("SignalTooShort: {len} samples reshape to {rows}x{cols}, need at least {side}x{side}")]
    SignalTooShort {
        len: usize,
        rows: usize,
        cols: usize,
        side: usize,
    },
    #[error("OutOfRange: ({row}, {col}) lacks a full 3x3 neighborhood in a {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("EvenKernel: kernel side {0} must be odd and at least 3")]
    EvenKernel(usize),
    #[error("ZeroMassPatch: patch values sum to zero")]
    ZeroMassPatch,
    #[error("NegativePatchValue: patch entries must be non-negative")]
    NegativePatchValue,
    #[error("DimensionMismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("EmptyDataset: no samples")]
    EmptyDataset,
    #[error("InconsistentDimensions: row {row} has {actual} values, expected {expected}")]
    InconsistentDimensions { row: usize, expected: usize, actual: usize },
    #[error("ZeroVector: vector {index} is all zeros")]
    ZeroVector { index: usize },
    #[error("EmptyTestSet: nothing to evaluate")]
    EmptyTestSet,
    #[error("BadK: k = {k} is invalid for {samples} samples (need 2 <= k <= samples)")]
    BadK { k: usize, samples: usize },
    #[error("ClassTooSmall: class '{class}' has {count} samples, fewer than k = {k}")]
    ClassTooSmall { class: String, count: usize, k: usize },
    #[error("UnknownLabel: label index {0} is not in the class table")]
    UnknownLabel(usize),
    #[error("ParseError: {path}: row {row}, column {col}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },
    #[error("NegativePower: {path}: row {row} has power {value}")]
    NegativePower { path: PathBuf, row: usize, value: f64 },
    #[error("MissingColumn: {path}: row {row} has no column {col}")]
    MissingColumn { path: PathBuf, row: usize, col: usize },
    #[error("BadSpec: {0}")]
    BadSpec(String),
    #[error("ModelFormat: {0}")]
    ModelFormat(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
