use std::path::PathBuf;

use crate::matrix::ExistenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not positive definite: pivot {index} is {pivot}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("iterate diverged: exponent {exponent} exceeds the overflow guard")]
    Diverged { exponent: f64 },

    /// The optimizer hit its iteration cap. `mean_trajectory[k][i]` is the
    /// grid mean of `v_i` after accepted step `k` (empty on the plane).
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
        mean_trajectory: Vec<Vec<f64>>,
    },

    #[error("no doubly periodic solution exists: condition {} fails", .0.first_failure().map_or(0, |i| i + 1))]
    Nonexistence(ExistenceReport),

    #[error("the total flux over the plane diverges unless a = 0 and is not computed for planar states")]
    DivergentFlux,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("background sharpness autotune did not reach sup|h~| <= 1/2 after {doublings} doublings (last sup {last_sup})")]
    NuAutotune { doublings: usize, last_sup: f64 },

    #[error("fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
