use thiserror::Error;

/// Errors raised by the estimation, evaluation and data layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("singular rotation: {0}")]
    SingularRotation(String),

    #[error("degenerate outcome: {0}")]
    DegenerateOutcome(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("perfect separation: {0}")]
    Separation(String),

    #[error("bootstrap failure: {0}")]
    BootstrapFailure(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("undefined measure: {0}")]
    UndefinedMeasure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("transform error in series {series} at {date}: {message}")]
    Transform {
        series: String,
        date: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable kebab-case tag, used by the CLI for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NumericalFailure(_) => "numerical-failure",
            Error::SingularRotation(_) => "singular-rotation",
            Error::DegenerateOutcome(_) => "degenerate-outcome",
            Error::SingularDesign(_) => "singular-design",
            Error::Separation(_) => "separation",
            Error::BootstrapFailure(_) => "bootstrap-failure",
            Error::DegenerateLabels(_) => "degenerate-labels",
            Error::UndefinedMeasure(_) => "undefined-measure",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Parse { .. } => "parse-error",
            Error::Transform { .. } => "transform-error",
            Error::Io(_) => "io-error",
            Error::Csv(_) => "csv-error",
            Error::Json(_) => "json-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
