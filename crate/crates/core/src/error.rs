//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Unparseable cell in an input file, with its location.
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Structural problem with an input file or declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A column is entirely missing after frequency alignment.
    #[error("alignment error: column '{0}' is entirely missing over the requested range")]
    Alignment(String),

    /// A variable recipe references data that is not there.
    #[error("construction error: {0}")]
    Construction(String),

    /// Invalid argument to a transform or test.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Too few usable observations for the requested estimation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Design matrix is rank deficient; lists the columns involved.
    #[error("collinear design: columns [{}] are linearly dependent", columns.join(", "))]
    Collinear { columns: Vec<String> },

    /// A series without enough variation to test.
    #[error("degenerate series: {0}")]
    Degenerate(String),

    /// Missing observations inside the estimation window.
    #[error("data gap in '{column}': missing values at {}", dates.join(", "))]
    DataGap { column: String, dates: Vec<String> },

    /// The autoregressive root is too close to one for long-run coefficients.
    #[error("no error correction: 1 - sum(phi) = {0:.3e} is too close to zero")]
    NoErrorCorrection(f64),

    /// Every candidate in a lag-selection grid failed.
    #[error("lag selection failed: {0}")]
    Selection(String),

    /// Invalid run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A series classified as I(2) or higher invalidates the bounds test.
    #[error("series integrated of order two or higher: [{}]", series.join(", "))]
    IntegratedOrderTwo { series: Vec<String> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code the command line maps this error to:
    /// 2 = validation, 3 = data, 4 = I(2) abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema(_) | Error::Argument(_) => 2,
            Error::IntegratedOrderTwo { .. } => 4,
            _ => 3,
        }
    }
}
