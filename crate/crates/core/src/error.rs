use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Vandermonde nodes are not pairwise distinct (min gap {min_gap:e})")]
    DuplicateNodes { min_gap: f64 },

    #[error("Vandermonde solve is ill-conditioned (relative residual {residual:e})")]
    IllConditioned { residual: f64 },

    #[error("unsupported stage count k = {0} (expected 2..=8)")]
    UnsupportedK(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator polynomial nearly vanishes at spectrum point {sigma} (|q| = {modulus:e})")]
    NearSingularDenominator { sigma: f64, modulus: f64 },

    #[error("dense solve residual too large ({residual:e} relative)")]
    ResidualTooLarge { residual: f64 },

    #[error("stability function has a pole at z = {re} + {im}i")]
    PoleAt { re: f64, im: f64 },

    #[error("(T - t0)/dt = {ratio} is not an integer step count")]
    NonIntegerStepCount { ratio: f64 },

    #[error("snapshot time {0} is outside the interval or off the step grid")]
    SnapshotOffGrid(f64),

    #[error("field is in the wrong space for this operation")]
    WrongSpace,

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("problem has no exact solution and no reference time step was supplied")]
    MissingReference,

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
