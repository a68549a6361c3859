//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u32),

    #[error("symbol {value} out of range for modulus {modulus}")]
    SymbolOutOfRange { value: u32, modulus: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("index {index} out of range ({reason})")]
    IndexOutOfRange { index: usize, reason: String },

    #[error("enumeration budget exceeded: needs {needed} units, limit {limit}")]
    Resource { needed: u128, limit: u128 },

    #[error("unknown code id `{0}`")]
    UnknownCode(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("state is unrecoverable: every candidate projection onto the code space vanishes")]
    Unrecoverable,
}
