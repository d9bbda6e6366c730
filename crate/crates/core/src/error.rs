use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("missing anthropometry: {0}")]
    MissingAnthropometry(String),
    #[error("column `{0}` has no observed values to impute from")]
    Unimputable(String),
    #[error("schema violation at row {row}, feature `{feature}`: {detail}")]
    SchemaViolation {
        row: usize,
        feature: String,
        detail: String,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("stratification infeasible: {0}")]
    StratificationInfeasible(String),
    #[error("degenerate contingency table for `{0}`")]
    DegenerateTable(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("infeasible k: {0}")]
    InfeasibleK(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown hyperparameter `{key}` for learner {learner}")]
    UnknownHyperParam { learner: String, key: String },
    #[error("invalid hyperparameter `{key}`: {detail}")]
    InvalidHyperParam { key: String, detail: String },
    #[error("logistic fit diverged (perfect separation?): {0}")]
    Separation(String),
    #[error("singular scatter matrix: {0}")]
    SingularScatter(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("rank deficient design: {0}")]
    RankDeficient(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("grid search failed: {0}")]
    SearchFailure(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
