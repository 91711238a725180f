use thiserror::Error;

/// Errors produced while building or evaluating rate-distortion problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} does not sum to 1 (sum = {sum})")]
    NotNormalized { what: String, sum: f64 },

    #[error("invalid probability {value} in {what}")]
    InvalidProbability { what: String, value: f64 },

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("invalid distortion entry d[{text}][{summary}] = {value}")]
    InvalidDistortion {
        text: usize,
        summary: usize,
        value: f64,
    },

    #[error(
        "kernel puts mass on summary {summary} (length {summary_length}) for text {text} (length {text_length})"
    )]
    LengthViolation {
        text: usize,
        summary: usize,
        text_length: usize,
        summary_length: usize,
    },

    #[error("no summary of length <= {length} is available")]
    NoAdmissibleSummary { length: usize },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("grid oracle needs {points} kernel evaluations, limit is {limit}")]
    OracleTooLarge { points: u128, limit: u128 },

    #[error("target distortion {target} is below the minimum achievable {minimum}")]
    Infeasible { target: f64, minimum: f64 },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} < -{threshold}")]
    NotPositiveSemidefinite { eigenvalue: f64, threshold: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rate diverges at zero distortion (target = {0})")]
    ZeroDistortion(f64),

    #[error("need at least 2 vectors for a sample covariance, got {0}")]
    TooFewSamples(usize),

    #[error("SRDE parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("texts without a paired summary: {0:?}")]
    Unpaired(Vec<usize>),

    #[error("grid point {index} (D = {value}): {source}")]
    GridPoint {
        index: usize,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
