use std::path::PathBuf;

/// Errors produced by the `myvt` library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Training hit a NaN/inf; `checkpoint` is the last good checkpoint, if one was written.
    #[error("numerical abort at iteration {iteration}: {reason}")]
    NumericalAbort {
        iteration: usize,
        reason: String,
        checkpoint: Option<PathBuf>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(xs: &[f64], context: impl FnOnce() -> String) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context: context() })
    }
}
