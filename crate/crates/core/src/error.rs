use thiserror::Error;

/// Errors raised while building, validating or simulating measurements.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("ket is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("measurement has no outcomes")]
    EmptyPom,

    #[error("{count} labels for {outcomes} outcomes")]
    LabelCount { count: usize, outcomes: usize },

    #[error("malformed outcome labels: {0}")]
    MalformedLabels(String),

    #[error("Kraus operators are not complete (max deviation {0:e})")]
    IncompleteKraus(f64),

    #[error("kets are not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("outcome probability {0:e} is too small to condition on")]
    ImpossibleOutcome(f64),

    #[error("negative probability {0:e} beyond tolerance")]
    NegativeProbability(f64),

    #[error("lambda {lambda} outside positivity window [{lo}, {hi}]")]
    LambdaOutOfRange { lambda: f64, lo: f64, hi: f64 },

    #[error("gamma {0} outside [0, pi/6]")]
    GammaOutOfRange(f64),

    #[error("scheme is invalid: {0}")]
    InvalidScheme(String),

    #[error("first-step Kraus operator {0} is not diagonal")]
    NonDiagonalKraus(usize),

    #[error("beam-splitter cascade infeasible: {0}")]
    InfeasibleCascade(String),

    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("measurement is not informationally complete (rank {rank}, need {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("no outcome matching: {0}")]
    NoMatching(String),

    #[error("shot count must be positive")]
    InvalidShots,

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
