use cwl_core::{AnalysisError, DelayError, GalerkinError, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GalerkinError> for CliError {
    fn from(e: GalerkinError) -> Self {
        match e {
            GalerkinError::SqrtFailure(_) | GalerkinError::NearSingularResolvent { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DelayError> for CliError {
    fn from(e: DelayError) -> Self {
        match e {
            DelayError::InvalidParams(_) | DelayError::StepMismatch { .. } | DelayError::DimensionMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            DelayError::BlowUp { .. } | DelayError::DegenerateWindow { .. } => CliError::Numerical(e.to_string()),
            DelayError::Galerkin(g) => g.into(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidFrequency(_)
            | AnalysisError::InvalidArgument(_)
            | AnalysisError::BelowInghamTime { .. } => CliError::Validation(e.to_string()),
            AnalysisError::Model(m) => m.into(),
            AnalysisError::CoincidentRoots(_)
            | AnalysisError::OverflowGuard(_)
            | AnalysisError::SingularMatching { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
