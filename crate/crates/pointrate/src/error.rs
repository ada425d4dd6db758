use thiserror::Error;

/// Errors produced across the pipeline. The CLI maps these onto exit codes:
/// data/format problems exit with 2, numerical problems with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid sigma: {0}")]
    InvalidSigma(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("collinear predictors: {0}")]
    Collinearity(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors arising from numerical evaluation rather than bad
    /// input files or arguments.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InvalidSigma(_)
                | Error::Collinearity(_)
                | Error::DegenerateFit(_)
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
