use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("assumption A1 violated: followers {unreachable:?} have no directed path from any leader")]
    Unreachable { unreachable: Vec<usize> },

    #[error("spectral certification failed: {0}")]
    Certification(String),

    #[error("{solver} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("singular system in {0}")]
    Singular(&'static str),

    #[error("duplicate interpolation node t = {0}")]
    DuplicateNode(f64),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
