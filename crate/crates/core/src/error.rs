use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("site {site} out of range for a lattice of {size} sites")]
    SiteOutOfRange { site: usize, size: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive definite (pivot {pivot} is {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("all pinning parameters vanish; at least one eps_j must be positive")]
    NoPinning,

    #[error("pinning mismatch: {0}")]
    PinningMismatch(String),

    #[error("{what} of size {size} exceeds the limit of {max}")]
    TooLarge {
        what: &'static str,
        size: usize,
        max: usize,
    },

    #[error("path is not a self-avoiding nearest-neighbor walk: {0}")]
    InvalidPath(String),

    #[error("quadrature produced a non-finite value")]
    QuadratureNonFinite,

    #[error("adaptive quadrature did not reach tolerance {tolerance:e} (estimate {estimate:e})")]
    QuadratureTolerance { tolerance: f64, estimate: f64 },

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    BracketFailure {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("beta = {beta} is not below beta_c = {beta_c}; the decay envelope is not guaranteed")]
    AboveCritical { beta: f64, beta_c: f64 },

    #[error("insufficient samples: {samples} per chain, need at least {needed}")]
    InsufficientSamples { samples: usize, needed: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
