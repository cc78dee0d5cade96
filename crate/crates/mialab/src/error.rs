//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, training, attacks, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation rejected its input (dimension mismatch, empty dataset,
    /// label out of range, invalid configuration value).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A dataset split could not be carried out as requested.
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// A shadow or transfer plan failed validation.
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    /// Malformed or truncated serialized data.
    #[error("parse error: {0}")]
    Parse(String),

    /// A serialized blob carries a format version this build does not read.
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    /// A structural consistency rule was violated (duplicate record ids).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// No threshold could be derived for a class (no shadow records seen).
    #[error("no threshold defined for class {0}")]
    ThresholdUndefined(usize),

    /// An adversary was queried for a class it does not cover.
    #[error("adversary does not cover class {0}")]
    UncoveredClass(usize),

    /// Training produced a non-finite parameter.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
