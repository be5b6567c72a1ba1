use std::path::PathBuf;

use gose::GoseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error(transparent)]
    Gose(#[from] GoseError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for anything the user can fix in the configuration, 3 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Parse { .. } => 2,
            Self::Gose(e) if is_config_error(e) => 2,
            _ => 3,
        }
    }
}

fn is_config_error(e: &GoseError) -> bool {
    matches!(
        e,
        GoseError::EpsilonTooLarge { .. }
            | GoseError::StochasticEpsilonTooLarge { .. }
            | GoseError::NonPositiveConstant { .. }
            | GoseError::StepWindow { .. }
            | GoseError::MissingVarianceBound
            | GoseError::UnknownProblem(_)
            | GoseError::DimensionMismatch { .. }
            | GoseError::NotStochastic
            | GoseError::NotFiniteSum
            | GoseError::InvalidP(_)
            | GoseError::BudgetZero
    )
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
