use thiserror::Error;

/// Errors raised by constructors and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate count {n} outside supported range 1..={max}")]
    ArityOutOfRange { n: usize, max: usize },

    #[error("index {index} out of range for {len} coordinates")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("value table entry {index} is {value}, expected -1 or +1")]
    NotBoolean { index: usize, value: f64 },

    #[error("noise rate {0} outside [0, 1]")]
    NoiseOutOfRange(f64),

    #[error("unsupported norm: {0}")]
    UnsupportedNorm(String),

    #[error("predicate dimension m = {0} must exceed 2")]
    DimensionTooSmall(u32),

    #[error("k = {0} is not of the form 2^m - 1 with m > 2")]
    NotHadamardLength(usize),

    #[error("k = {k} too large for exact predicate tables (max {max})")]
    PredicateTooLarge { k: usize, max: usize },

    #[error("epsilon {eps} outside (0, 1/k^2] for k = {k}")]
    EpsilonOutOfRange { eps: String, k: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("covariance needs two distinct coordinates, got i = j = {0}")]
    SameCoordinate(usize),

    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),

    #[error("table of {size} entries exceeds cap {cap}")]
    TableTooLarge { size: u128, cap: u128 },

    #[error("delta {0} is negative")]
    NegativeDelta(f64),

    #[error("delta {delta} outside admissible range for k = {k} (discriminant {discriminant})")]
    DeltaInadmissible { k: usize, delta: f64, discriminant: f64 },

    #[error("polynomial 2-norm {0} exceeds 1")]
    NormTooLarge(f64),

    #[error("q = {0} must be an even integer >= 2")]
    OddMoment(u32),

    #[error("trial count must be positive")]
    ZeroTrials,

    #[error("enumeration of {size} atom sequences exceeds budget {budget}")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("character method requires a single-character function")]
    NotACharacter,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("level {0} is symbolic only and cannot be sampled")]
    SymbolicLevel(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
