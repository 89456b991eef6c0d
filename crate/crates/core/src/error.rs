use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// A function was evaluated outside the region where it is defined
    /// (non-positive mass, non-positive radius, singular point, ...).
    #[error("domain error at {at}: {what}")]
    Domain { what: String, at: f64 },

    #[error("grid is not uniform (spacing deviates by {deviation:.3e})")]
    NonUniformGrid { deviation: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("singular coefficient at r = {r}: {what}")]
    SingularCoefficient { what: String, r: f64 },

    #[error("ODE integration failed after last good radius {last_good_r}: {what}")]
    Integration { what: String, last_good_r: f64 },

    #[error("extrapolation requested outside [{lo}, {hi}]: clipped interval [{clip_lo}, {clip_hi}]")]
    Extrapolation {
        lo: f64,
        hi: f64,
        clip_lo: f64,
        clip_hi: f64,
    },

    #[error("eigensolver did not converge for eigenpair {index}")]
    Convergence { index: usize },

    #[error("requested {requested} eigenpairs but operator has dimension {dimension}")]
    TooManyEigenpairs { requested: usize, dimension: usize },

    #[error("operator is not symmetric tridiagonal: {0}")]
    NotSymmetric(String),

    #[error("domain too small to confine {k} states: {advice}")]
    Unconfined { k: usize, advice: String },

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("ordering parameters violate alpha + beta + gamma = -1 (sum = {sum})")]
    OrderingConstraint { sum: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported integration scheme: {0}")]
    UnsupportedScheme(String),

    #[error("trajectory left the map domain at t = {t}")]
    LeftDomain { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: impl Into<String>, at: f64) -> Self {
        Error::Domain { what: what.into(), at }
    }
}
