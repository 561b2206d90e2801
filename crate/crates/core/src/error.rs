//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("row {row}: every observed part is zero")]
    DegenerateRow { row: usize },

    #[error("row {row}: no complete row has a positive sum over the observed columns")]
    NoDonors { row: usize },

    #[error("row {row}: row has no missing parts")]
    MissingSetEmpty { row: usize },

    #[error("row {row}: observed parts sum to {observed_sum}, exceeding 1")]
    InconsistentRow { row: usize, observed_sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero part in log-ratio distance ({context})")]
    ZeroInLogRatio { context: String },

    #[error("invalid contour resolution {0}; must be at least 2")]
    InvalidResolution(usize),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("alpha {0} is outside [-1, 1]")]
    AlphaOutOfRange(f64),

    #[error("negative alpha {alpha} is not allowed when parts are zero")]
    AlphaZeroConflict { alpha: f64 },

    #[error("geometric mean undefined: every part has a zero in some row")]
    GeometricUndefined,

    #[error("row {row}: needs {needed} donors, only {available} usable")]
    InsufficientDonors {
        row: usize,
        needed: usize,
        available: usize,
    },

    #[error("cross-validation infeasible: {0}")]
    CvInfeasible(String),

    #[error("Aitchison metric requested but the data contain zeros")]
    MetricZeroConflict,

    #[error("degenerate injection spec: {0}")]
    DegenerateSpec(String),

    #[error("too few rows: {0}")]
    TooFewRows(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("negative value at line {line}, column {column}")]
    NegativeCell { line: usize, column: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{source}")]
    Json {
        #[from]
        source: serde_json::Error,
    },
}

impl Error {
    /// Short stable identifier, used for machine-parsable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::DegenerateRow { .. } => "DegenerateRow",
            Error::NoDonors { .. } => "NoDonors",
            Error::MissingSetEmpty { .. } => "MissingSetEmpty",
            Error::InconsistentRow { .. } => "InconsistentRow",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroInLogRatio { .. } => "ZeroInLogRatio",
            Error::InvalidResolution(_) => "InvalidResolution",
            Error::EmptyInput(_) => "EmptyInput",
            Error::AlphaOutOfRange(_) => "AlphaOutOfRange",
            Error::AlphaZeroConflict { .. } => "AlphaZeroConflict",
            Error::GeometricUndefined => "GeometricUndefined",
            Error::InsufficientDonors { .. } => "InsufficientDonors",
            Error::CvInfeasible(_) => "CvInfeasible",
            Error::MetricZeroConflict => "MetricZeroConflict",
            Error::DegenerateSpec(_) => "DegenerateSpec",
            Error::TooFewRows(_) => "TooFewRows",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse { .. } => "ParseError",
            Error::NegativeCell { .. } => "NegativeValue",
            Error::Io { .. } => "IoError",
            Error::Csv { .. } => "CsvError",
            Error::Json { .. } => "JsonError",
            Error::Context { source, .. } => source.kind(),
        }
    }

    /// Wraps the error with a location such as a grid index or a row.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
