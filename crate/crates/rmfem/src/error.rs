use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate perturbation scheme: no perturbable nodes")]
    DegenerateScheme,
    #[error("observation location ({0}, {1}) does not match exactly one node (tol {2})")]
    UnmatchedObservation(f64, f64, f64),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("linear system is singular or ill-conditioned: {0}")]
    SingularSystem(String),
    #[error("parameter mismatch between solutions")]
    ParamMismatch,
    #[error("log-posterior is not finite at the initial state")]
    NonFiniteInit,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
