use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stokes vector must have 4 or 16 components, got {0}")]
    BadStokesLength(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not hermitian: max |a_ij - conj(a_ji)| = {0:.3e}")]
    NotHermitian(f64),

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    EigenNotConverged { sweeps: usize, off: f64 },

    #[error("qubit count must be 1 or 2, got {0}")]
    BadQubitCount(u8),

    #[error("instrument matrix is singular (inversion residual {0:.3e})")]
    SingularMatrix(f64),

    #[error("state is not normalized: S0 = {0}")]
    NotNormalized(f64),

    #[error("state is unphysical: outcome {index} has probability {value:.3e}")]
    UnphysicalState { index: usize, value: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("count vector has zero total")]
    EmptyCounts,

    #[error("{patterns} partition patterns exceed the cap of {cap}; use the Monte-Carlo path")]
    PatternCapExceeded { patterns: u64, cap: u64 },

    #[error("{sequences} raw sequences exceed the brute-force cap of {cap}")]
    SequenceCapExceeded { sequences: u64, cap: u64 },

    #[error("partition weights sum to {0}, expected 1 within 1e-10")]
    WeightCompleteness(f64),

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("power-law fit requires positive averages; found d_avg = {0}")]
    NonPositivePoint(f64),

    #[error("curve is already normalized")]
    AlreadyNormalized,

    #[error("grid resolution must be at least 16, got {0}")]
    BadGridResolution(usize),

    #[error("threshold delta must be positive, got {0}")]
    BadThreshold(f64),

    #[error("failed to parse curve CSV at line {line}: {reason}")]
    CurveParse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
