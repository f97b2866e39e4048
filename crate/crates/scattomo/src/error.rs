use std::path::PathBuf;

use scattomo_core::Error as EngineError;

/// Process exit code for configuration and input problems.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for numerical failures inside the engines.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: schema violation:\n{0}")]
    Schema(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("io: {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Engine(e) if is_numeric(e) => EXIT_NUMERIC,
            Self::Csv(_) | Self::Json(_) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

/// Failures of the computation itself rather than of its inputs.
pub fn is_numeric(e: &EngineError) -> bool {
    matches!(
        e,
        EngineError::TruncationExceeded { .. }
            | EngineError::CutoffViolation { .. }
            | EngineError::BoundNotConverged { .. }
            | EngineError::TooFewPoints { .. }
            | EngineError::QuadratureNotConverged { .. }
            | EngineError::HermiteOverflow { .. }
    )
}
