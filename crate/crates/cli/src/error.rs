//! Pipeline-level error type.
//!
//! Core math errors pass through unchanged; everything the pipeline adds is
//! about files: parse failures with location context, batched missing-file
//! reports, and IO failures that name their path. `Usage` is reserved for
//! configuration contradictions that should exit with the usage status (2)
//! rather than the runtime status (1).

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// A manifest or data file failed to parse; `line` is 1-based (0 when
    /// the problem is not tied to a single line).
    #[error("{path}:{line}: {msg}", path = .path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    /// Files referenced by a manifest that do not exist — always the
    /// complete list, never just the first.
    #[error("missing files: {}", join_paths(.0))]
    MissingFiles(Vec<PathBuf>),

    /// Frames that have ground truth but no prediction artifact.
    #[error("missing predictions for frames: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    /// An IO failure, with the path that triggered it.
    #[error("{path}: {source}", path = .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Per-frame failures collected from a batch run.
    #[error("{failed} of {total} frames failed; first: frame {first_id}: {first_error}")]
    Frames { failed: usize, total: usize, first_id: String, first_error: String },

    /// A configuration contradiction (exit status 2, like a bad flag).
    #[error("{0}")]
    Usage(String),

    /// A runtime failure that is not tied to a file (exit status 1).
    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Core(#[from] spatspec_core::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    /// Attaches a path to a raw IO error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    /// The process exit status this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}
