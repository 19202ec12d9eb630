//! Error types shared across the crate.

/// Errors produced by configuration validation, geometry handling and the
/// numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value or combination of values is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Two objects that must agree in size do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine produced a non-finite value or failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
