//! Error type shared by all modules of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    InvalidDimension,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("majority over an empty input set")]
    EmptyBundle,

    #[error("even input count {count} requires a tie-break vector")]
    MissingTieBreak { count: usize },

    #[error("odd input count {count} must not carry a tie-break vector")]
    UnexpectedTieBreak { count: usize },

    #[error("majority tie at dimension {dim} with tie breaking disabled")]
    MajorityTie { dim: usize },

    #[error("row index {row} out of range ({rows} rows)")]
    RowOutOfRange { row: usize, rows: usize },

    #[error("channel index {channel} out of range ({channels} channels)")]
    ChannelOutOfRange { channel: usize, channels: usize },

    #[error("level {level} out of range for channel {channel} (valid: 1..={levels})")]
    LevelOutOfRange {
        channel: usize,
        level: usize,
        levels: usize,
    },

    #[error("class index {class} out of range ({classes} classes)")]
    ClassOutOfRange { class: usize, classes: usize },

    #[error("class {class} has no accumulated n-grams")]
    EmptyClass { class: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-finite sample at line {line}, channel {channel}")]
    NonFinite { line: usize, channel: usize },

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
