use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row} is not stochastic (|sum - 1| = {residual:e})")]
    NonStochasticRow { row: usize, residual: f64 },

    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("requested {rows}x{cols} matrix exceeds the size cap of {cap} entries")]
    SizeCapExceeded { rows: u128, cols: u128, cap: usize },

    #[error("restriction to one-hot rows needs 2^k rows with k >= 2, got {0} rows")]
    NotPowerOfTwoRows(usize),

    #[error("exact mode supports at most {max} columns, got {cols}")]
    ExactModeTooWide { cols: usize, max: usize },

    #[error("domain size must be at least 2, got {0}")]
    InvalidDomainSize(usize),

    #[error("epsilon must be a finite non-negative number, got {0}")]
    NegativeEpsilon(f64),

    #[error("subset size omega = {omega} is outside [1, {max}]")]
    OmegaOutOfRange { omega: usize, max: usize },

    #[error("hash range g must be at least 2, got {0}")]
    InvalidHashRange(usize),

    #[error("protocol {0} requires theta")]
    ThetaRequired(&'static str),

    #[error("theta must lie in the open interval (0.5, 1), got {0}")]
    ThetaOutOfRange(f64),

    #[error("invalid mechanism spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported spec: {0}")]
    UnsupportedSpec(String),

    #[error("expected a 2x2 channel, got {rows}x{cols}")]
    NotTwoByTwo { rows: usize, cols: usize },

    #[error("simplex stopped after {iterations} pivots (best residual {best_residual:e})")]
    SolverIterationLimit { iterations: usize, best_residual: f64 },

    #[error("an ascending epsilon grid with at least two points is required")]
    AscendingGridRequired,

    #[error("parse error in {source_name} at line {line}: {reason}")]
    Parse { source_name: String, line: usize, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("value {value} is outside the domain [0, {k})")]
    ValueOutOfRange { value: usize, k: usize },

    #[error("report shape does not match the spec: {0}")]
    ShapeMismatch(String),

    #[error("estimator is degenerate (p* = q* = {0})")]
    DegenerateEstimator(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
