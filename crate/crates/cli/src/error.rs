use ordmed::{
    DatasetError, EffectError, EstimationError, InferenceError, ModelError, SimulationError,
};

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Convergence(String),
    #[error("bootstrap unreliable: {failures} of {resamples} resamples failed")]
    Unreliable { failures: usize, resamples: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Convergence(_) => 2,
            CliError::Unreliable { .. } => 3,
        }
    }

    pub fn validation(msg: impl std::fmt::Display) -> Self {
        CliError::Validation(msg.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EffectError> for CliError {
    fn from(e: EffectError) -> Self {
        match e {
            EffectError::Model(m) => m.into(),
            other => CliError::Convergence(other.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Model(_)
            | EstimationError::ConstantMediator(_)
            | EstimationError::EmptyCategory(_)
            | EstimationError::RankDeficient { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Convergence(e.to_string()),
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::AllReplicatesFailed(_) => CliError::Convergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Estimation(inner) => inner.into(),
            InferenceError::Effect(inner) => inner.into(),
            InferenceError::AllResamplesFailed(n) => CliError::Unreliable {
                failures: n,
                resamples: n,
            },
            other => CliError::Validation(other.to_string()),
        }
    }
}
