use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sector has {requested} basis states, above the limit of {limit}")]
    SectorTooLarge { requested: u128, limit: usize },

    /// The density at `positions` is below the node floor; the guidance
    /// velocity is singular there.
    #[error("configuration is at a node of the wavefunction (rho = {density:e}, floor = {floor:e})")]
    NearNode {
        density: f64,
        floor: f64,
        positions: Vec<f64>,
    },

    #[error("jump step too large: total rate * dt = {0} exceeds 0.1")]
    StepTooLarge(f64),

    #[error("rejection sampling efficiency {efficiency:e} below 1e-4 (envelope {envelope:e})")]
    SamplingEfficiency { efficiency: f64, envelope: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    ToleranceNotMet { estimate: f64, error: f64 },

    #[error("source term has non-zero mean {0:e}; Poisson problem is inconsistent")]
    NonZeroMean(f64),

    #[error("measurement scenario invalid: branch overlap {0:e} above threshold")]
    BranchOverlap(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
