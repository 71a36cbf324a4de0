//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bit index {index} out of range for a vector of {len} bits")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("rank {rank} out of range: vector has {ones} one bits")]
    RankOutOfRange { rank: u64, ones: u64 },

    #[error("density {0} is outside [0, 1]")]
    InvalidDensity(f64),

    #[error("vector has no one bits")]
    NoOnes,

    #[error("vector has no nonzero words")]
    NoNonzeroWords,

    #[error("index was built over a vector of {expected} bits, queried with one of {got} bits")]
    IndexMismatch { expected: u64, got: u64 },

    #[error("bad magic: expected {expected}")]
    BadMagic { expected: &'static str },

    #[error("unsupported {family} format version {found}")]
    UnsupportedVersion { family: &'static str, found: u32 },

    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),

    #[error("truncated input while reading {0}")]
    Truncated(&'static str),

    #[error("nonzero padding bits past the stated bit length")]
    NonzeroPadding,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checksum mismatch across backends: {0}")]
    ChecksumMismatch(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
