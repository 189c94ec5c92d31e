use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image dimensions must be nonzero, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer has {actual} entries, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("connectivity must be 4 or 8, got {0}")]
    Connectivity(u8),
}

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed PGM: {0}")]
    Format(String),
    #[error(transparent)]
    Image(#[from] ImagingError),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is in phase {0:?}, expected Complete")]
    WrongPhase(crate::trace::Phase),
    #[error("invalid trace configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("pattern has no ink")]
    EmptyPattern,
    #[error("feature vector must have {expected} values, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("feature value {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
    #[error("no sample has a label in the kept set")]
    EmptyResult,
    #[error("label set to keep is empty")]
    EmptyKeep,
    #[error("split of {samples} samples at fraction {fraction} leaves a side empty")]
    DegenerateSplit { samples: usize, fraction: f64 },
    #[error("unknown letter label {0:?}")]
    Letter(String),
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training data has fewer than two distinct labels")]
    SingleClass,
    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("evaluation set is empty")]
    EmptyTest,
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not a model file of a supported version (found {found:?})")]
    Version { found: String },
    #[error("model checksum failure: {0}")]
    Checksum(String),
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("bindings line {line}: {message}")]
    Bindings { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("no template for letter {0:?}")]
    UnsupportedLetter(char),
    #[error("blob center ({x:.2}, {y:.2}) leaves the {width}x{height} frame")]
    BlobOutOfBounds { x: f64, y: f64, width: usize, height: usize },
    #[error("invalid gesture script: {0}")]
    Script(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("frame {index} is {width}x{height}, pipeline expects {expected_width}x{expected_height}")]
    FrameSize { index: u64, width: usize, height: usize, expected_width: usize, expected_height: usize },
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}
