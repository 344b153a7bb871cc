use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chord: half angle {0} must lie in (0, pi/2]")]
    InvalidChord(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is outside the domain [0, pi/2]")]
    Domain(f64),

    #[error("invalid distance table at node {node}: {reason}")]
    InvalidTable { node: usize, reason: String },

    #[error("unknown distance distribution '{0}' (expected sine, uniform or table:<path>)")]
    UnknownDistribution(String),

    #[error("cannot read distance table {}: {source}", path.display())]
    TableIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("integration routes disagree: {first} vs {second} (difference {diff:e})")]
    CrossCheck { first: f64, second: f64, diff: f64 },

    #[error("inconsistent moments: Var(R_n) = {0} is negative")]
    InconsistentMoments(f64),

    #[error("bound valid only for n > 5, got n = {0}")]
    BoundValidity(u64),

    #[error("zero variance: sigma = {0}, cannot normalize")]
    ZeroVariance(f64),

    #[error("sample size {0} is too small for the KS test (need at least 5)")]
    SampleSize(usize),

    #[error("sign-vector oracle supports at most 32 chords, got {0}")]
    Capacity(usize),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Quadrature { .. } | Error::CrossCheck { .. } | Error::Csv(_) | Error::Json(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
