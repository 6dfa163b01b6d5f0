use astig_core::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameters: {0}")]
    Params(String),

    #[error(transparent)]
    Geom(#[from] GeomError),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for parameters outside the model's domain, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Params(_) => 2,
            CliError::Geom(
                GeomError::InvalidParams(_)
                | GeomError::Regime(_)
                | GeomError::ComponentUnavailable(_)
                | GeomError::NoSolution(_),
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
