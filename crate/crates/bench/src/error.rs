use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed scenario text. `line` is 1-based when the parser knows it.
    #[error("{origin}{}: {message} (at `{field}`)", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        origin: String,
        line: Option<usize>,
        field: String,
        message: String,
    },

    /// Well-formed input whose values break a model invariant.
    #[error("{context}: {source}")]
    Validation {
        context: String,
        source: ehrelay::Error,
    },

    #[error(transparent)]
    Core(#[from] ehrelay::Error),

    #[error("cannot write output: {0}")]
    Output(String),
}

impl BenchError {
    /// Process exit status: 2 for bad input, 4 for solver non-convergence,
    /// 1 for I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Parse { .. } | BenchError::Validation { .. } => 2,
            BenchError::Core(ehrelay::Error::NonConvergence { .. }) => 4,
            BenchError::Core(_) => 2,
            BenchError::Io { .. } | BenchError::Output(_) => 1,
        }
    }
}
