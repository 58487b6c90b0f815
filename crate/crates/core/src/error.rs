use thiserror::Error;

/// Failures raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CknError {
    #[error("dimension N = {0} is too small (need N >= {1})")]
    DimensionTooSmall(usize, usize),
    #[error("alpha = {alpha} outside the admissible interval ({lo}, 2) for N = {n}")]
    AlphaOutOfRange { n: usize, alpha: f64, lo: f64 },
    #[error("effective dimension M = {0} must exceed 4")]
    MOutOfRange(f64),
    #[error("spherical-harmonic mode index {0} is negative")]
    NegativeMode(i64),
    #[error("scale lambda = {0} must be positive")]
    NonpositiveScale(f64),
    #[error("radius r = {0} must be positive")]
    NonpositiveRadius(f64),
    #[error("alpha = {alpha} is not -2(k-1) for k = {k}")]
    NotEvenCase { alpha: f64, k: u32 },
    #[error("dimension N = {0} must be even")]
    OddDimension(usize),
    #[error("integral does not converge: {0}")]
    NonIntegrable(String),
    #[error("function vanishes identically")]
    ZeroFunction,
    #[error("grid has {nodes} nodes, at least {min} required")]
    GridTooCoarse { nodes: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),
    #[error("mode {k}: analytic kernel test says {analytic}, spectrum says {numeric}")]
    InconsistentKernel { k: u32, analytic: bool, numeric: bool },
    #[error("minimisation did not converge (best value {best})")]
    NoConvergence { best: f64 },
    #[error("function lies on the extremal manifold; quotient undefined")]
    OnManifold,
    #[error("fixed-point map is not contracting (observed factor {0:.3})")]
    ContractionFailure(f64),
    #[error("perturbation too large: |eps| * sup|h| = {0} > 1")]
    EpsilonTooLarge(f64),
    #[error("reduced energy is numerically constant; no interior extremum")]
    NoInteriorExtremum,
    #[error("integer overflow evaluating {0}")]
    Overflow(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CknError>;
