use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("symmetric eigensolver failed to converge on a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("singular core matrix: no eigenvalue survives truncation")]
    SingularCore,

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("degenerate target rank: |lambda_r| = {lambda_r:e} is below 1e-14 * |lambda_1| = {lambda_1:e}")]
    DegenerateTargetRank { lambda_r: f64, lambda_1: f64 },

    #[error("sketch block X1*Q_perp stayed rank deficient after {attempts} draws")]
    RankDeficient { attempts: usize },

    #[error("(c2 - c1) * r - 1 must be at least 1 for the pseudoinverse expectation, got {0}")]
    VarianceUndefined(i64),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used for the `error` column of experiment CSVs.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::EigenFailure { .. } => "eigen_failure",
            Error::SingularCore => "singular_core",
            Error::DegenerateSpectrum(_) => "degenerate_spectrum",
            Error::DegenerateTargetRank { .. } => "degenerate_target_rank",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::VarianceUndefined(_) => "variance_undefined",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
        }
    }
}
