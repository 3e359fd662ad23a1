use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("dimension {0} is not supported (need n >= 5)")]
    InvalidDimension(usize),
    #[error("the theorem pipeline needs n >= 6, got {0}")]
    DimensionTooSmall(usize),
    #[error("concentration scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("axis {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: usize, n: usize },
    #[error("invalid K profile: {0}")]
    InvalidProfile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} did not converge: value {value:e}, change on refinement {change:e}")]
    NonConvergence { what: String, value: f64, change: f64 },
    #[error("closed form and quadrature disagree for {what}: {closed:e} vs {quadrature:e}")]
    Disagreement { what: String, closed: f64, quadrature: f64 },
    #[error("Gram matrix ill-conditioned (condition {0:e}) after thinning")]
    IllConditioned(f64),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("fixed point diverged; step norms {trace:?}")]
    Divergence { trace: Vec<f64> },
    #[error("Newton iteration failed: {0}")]
    NewtonFailure(String),
    #[error("degenerate balance: beta1*beta2 equals (n-4)(beta1+beta2)/2")]
    DegenerateBalance,
    #[error("no root of the reduced map in the box")]
    NoRoot,
    #[error("{count} roots found in the box; uniqueness fails (candidate cells {cells:?})")]
    MultipleRoots { count: usize, cells: Vec<[[f64; 2]; 2]> },
    #[error("degree undefined on this box (boundary norm {0:e})")]
    DegreeUndefined(f64),
    #[error("fit rejected: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ForgeError>;
