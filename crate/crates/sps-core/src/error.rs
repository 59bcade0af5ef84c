use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum SpsError {
    #[error("matrix is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("matrix is not positive definite: smallest eigenvalue {eigenvalue:e}")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("matrix is not symmetric within tolerance (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid (m, q): need 0 < q < m, got m={m}, q={q}")]
    InvalidMq { m: usize, q: usize },

    #[error("noise distribution must be symmetric about zero: {0}")]
    AsymmetricNoise(String),

    #[error("singular prefix Gram matrix in trajectory {trajectory} at t={t}")]
    SingularPrefixGram { trajectory: usize, t: usize },

    #[error(
        "exhaustive excitation check infeasible: C({n},{d}) = {subsets} subsets > 10^6; \
         use randomized mode"
    )]
    ExhaustiveInfeasible { n: usize, d: usize, subsets: u128 },

    #[error("synthetic mode required: dataset carries no {0}")]
    NotSynthetic(&'static str),

    #[error("delta out of range: {0}")]
    DeltaOutOfRange(String),

    #[error(
        "sample size n={n} below validity threshold: Theorem 2 bound requires n >= {min_n} \
         and n^rho > g strictly"
    )]
    BoundNotValid { n: usize, min_n: usize },

    #[error("SPS region is unbounded; cannot sample points")]
    UnboundedRegion,

    #[error("rejection sampling acceptance rate below 1e-6 ({accepted} of {drawn} draws)")]
    RejectionTooSlow { accepted: usize, drawn: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SpsError>;
