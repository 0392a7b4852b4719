use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rate matrix: {0}")]
    Matrix(String),

    #[error("malformed number {value:?} at row {row}, column {col}")]
    MalformedNumber { row: usize, col: usize, value: String },

    #[error("rate matrix is not square: row {row} has {found} entries, expected {expected}")]
    NotSquare { row: usize, found: usize, expected: usize },

    #[error("diagonal entry at ({index}, {index}) is {value}, expected 1")]
    Diagonal { index: usize, value: f64 },

    #[error("negative rate {value} at row {row}, column {col}")]
    NegativeRate { row: usize, col: usize, value: f64 },

    #[error("duplicate currency code {0:?}")]
    DuplicateCurrency(String),

    #[error("invalid currency code {0:?}")]
    InvalidCurrency(String),

    #[error("K out of range: K = {k}, must satisfy 2 <= K <= {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("penalty weights must be positive, got {0}")]
    NonPositivePenalty(f64),

    #[error("penalty override factor {0} would push a weight below the calibrated bound")]
    PenaltyBelowBound(f64),

    #[error("bitstring length {found} does not match model size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error("rate product must be positive, got {0}")]
    NonPositiveProduct(f64),

    #[error("brute-force scan supports at most {max} variables, model has {n}")]
    TooManyVariables { n: usize, max: usize },

    #[error("zero iteration budget")]
    ZeroBudget,

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("parameter vector has length {found}, circuit expects {expected}")]
    ParamLength { expected: usize, found: usize },

    #[error("shots must be positive in sampled mode")]
    ZeroShots,

    #[error("trained parameters do not match this model: {0}")]
    ModelMismatch(String),

    #[error("qubo text format, line {line}: {msg}")]
    QuboFormat { line: usize, msg: String },

    #[error("benchmark: {0}")]
    Bench(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
