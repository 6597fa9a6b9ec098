use thiserror::Error;

/// Errors produced by the estimation and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("association parameter must be finite, got {0}")]
    NonFiniteTheta(f64),

    #[error("sample too small: need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("target {0} outside the open interval (-1, 1)")]
    OutOfRange(f64),

    #[error("perfect dependence (rank correlation {0}); moment estimator undefined")]
    PerfectDependence(f64),

    #[error("posterior weights underflowed on every grid node")]
    DegeneratePosterior,

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("no critical value for n = {n}, theta = {theta}, level = {level}: {reason}")]
    OutOfTable {
        n: usize,
        theta: f64,
        level: f64,
        reason: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{failed} of {total} replications failed (limit {limit})")]
    ReplicationFailures {
        failed: usize,
        total: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
