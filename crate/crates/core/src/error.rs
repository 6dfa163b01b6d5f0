use thiserror::Error;

/// Errors raised by the geometry and numerics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("arc length is not strictly increasing at sample {index}")]
    NonMonotone { index: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("quadrature did not converge: estimated error {achieved:.3e} exceeds {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("no sign change of the target function on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("step size underflow at s = {s}, x = {x}")]
    StepUnderflow { s: f64, x: f64 },

    #[error("start point is off the level set F = d (relative deviation {deviation:.3e})")]
    NotOnLevelSet { deviation: f64 },

    #[error("the orbit F(x,y) = d does not meet the x-axis")]
    NoIntersection,

    #[error("component unavailable: {0}")]
    ComponentUnavailable(String),

    #[error("unsupported regime: {0}")]
    Regime(String),

    #[error("no constant-curvature critical curve: {0}")]
    NoSolution(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate curvature at sample {index} (s = {s}): {reason}")]
    DegenerateCurvature { index: usize, s: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, GeomError>;
