use std::path::PathBuf;

/// Errors produced by every stage of the toolchain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A binary container could not be decoded.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// An architecture, budget or configuration failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// Training diverged.
    #[error("non-finite loss at epoch {epoch}, step {step} (try a smaller learning rate than {learning_rate})")]
    NonFinite {
        epoch: usize,
        step: usize,
        learning_rate: f64,
    },

    /// A least-squares fit was under-determined.
    #[error("degenerate fit: {0}")]
    Fit(String),

    /// An internal invariant was broken (for example a cyclic netlist).
    #[error("internal error: {0}")]
    Internal(String),

    /// Structural Verilog could not be read back.
    #[error("verilog line {line}: {message}")]
    Verilog { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
