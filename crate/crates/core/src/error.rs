//! Error type shared by every chain stage.

use thiserror::Error;

/// Errors raised by the physical-layer chain.
#[derive(Debug, Clone, Error)]
pub enum PhyError {
    /// A configuration value is out of range or inconsistent.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Sample rate too low for the requested operation.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// Input does not frame as expected (missing delimiter, partial symbol...).
    #[error("framing error: {0}")]
    Framing(String),
    /// Framed fields violate air-interface constraints.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// Clock extraction lost the symbol timing.
    #[error("sync loss: {0}")]
    SyncLoss(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PhyError {
    fn from(e: std::io::Error) -> Self {
        PhyError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PhyError>;
