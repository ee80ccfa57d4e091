use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis dimension {dim} exceeds the configured limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("eigensolver failed (LAPACK {routine}, info = {info}) for dim = {dim}, {context}")]
    Eigensolver {
        routine: &'static str,
        info: i32,
        dim: usize,
        context: String,
    },

    #[error("energy window [{lo}, {hi}] lies outside the computed spectrum [{min}, {max}]")]
    WindowOutsideSpectrum {
        lo: f64,
        hi: f64,
        min: f64,
        max: f64,
    },

    #[error("not enough levels: {found} found, {needed} needed")]
    TooFewLevels { found: usize, needed: usize },

    #[error("truncation insufficient: captured {captured:.6} of the expected weight (threshold {threshold}); increase n_max or widen the energy window")]
    Truncation { captured: f64, threshold: f64 },

    #[error("spectrum has {count} flagged near-degenerate pair(s); pass the degeneracy override to proceed")]
    Degenerate { count: usize },

    #[error("time grid is not strictly increasing at index {index}")]
    TimeGridNotIncreasing { index: usize },

    #[error("phase point outside the energy shell: {0}")]
    OffShell(String),

    #[error("pole of the spin sphere reached: {0}")]
    Pole(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("step budget of {budget} exhausted at t = {t}")]
    StepBudget { t: f64, budget: usize },

    #[error("decomposition is unstructured: {0}")]
    Unstructured(String),

    #[error("map grids do not match: {0}")]
    GridMismatch(String),

    #[error("cache file {path} is corrupt: {reason}")]
    CorruptCache { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 1 for usage and
    /// configuration problems, 2 for numerical failures, 3 when the
    /// analytic description does not apply.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionOverflow { .. }
            | Error::Eigensolver { .. }
            | Error::WindowOutsideSpectrum { .. }
            | Error::TooFewLevels { .. }
            | Error::Truncation { .. }
            | Error::Degenerate { .. }
            | Error::Integration { .. }
            | Error::StepBudget { .. } => 2,
            Error::Unstructured(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
