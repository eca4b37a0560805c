use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OnnError>;

/// Errors raised by the optical compute models.
#[derive(Debug, Error)]
pub enum OnnError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: `{field}` {reason}")]
    Domain { field: &'static str, reason: String },

    /// The drive voltage pushes the follower laser out of injection lock.
    #[error("injection lock lost: |v_drive| = {v_drive:e} V exceeds V_pi/2 = {limit:e} V")]
    Unlocked { v_drive: f64, limit: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A waveform does not contain a whole number of symbol slots.
    #[error("length error: {0}")]
    Length(String),

    /// Malformed file contents.
    #[error("format error: {0}")]
    Format(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    /// Operation called with state it cannot use (e.g. an inference-mode cache for backprop).
    #[error("state error: {0}")]
    State(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl OnnError {
    pub fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        OnnError::Domain {
            field,
            reason: reason.into(),
        }
    }
}

/// Fails with a domain error unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(OnnError::domain(field, format!("must be > 0 (got {value})")))
    }
}

pub(crate) fn ensure_non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(OnnError::domain(field, format!("must be >= 0 (got {value})")))
    }
}
