use std::fmt;

use thiserror::Error;

/// Errors raised when constructing or evaluating the parametric models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("thresholds must be strictly increasing, but alpha[{}] = {lower} >= alpha[{}] = {upper}", .index, .index + 1)]
    UnorderedThresholds {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("an outcome model needs at least one threshold (J >= 2)")]
    TooFewLevels,
    #[error("covariate dimension mismatch: model has {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("threshold index {level} is outside 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("mediator value must be 0 or 1, got {0}")]
    InvalidMediator(u8),
    #[error("indicator value must be 0 or 1, got {0}")]
    InvalidIndicator(u8),
    #[error(
        "mediator and outcome models disagree on covariate dimension ({mediator} vs {outcome})"
    )]
    IncompatibleModels { mediator: usize, outcome: usize },
    #[error("input `{0}` is not finite")]
    NonFiniteInput(&'static str),
}

/// One offending field of one input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Zero-based row index in the raw input.
    pub row: usize,
    pub field: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row {}, field `{}`: {}",
            self.row, self.field, self.reason
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("number of outcome levels must be at least 2, got {0}")]
    TooFewLevels(usize),
    #[error("{} invalid field(s):\n{}", .0.len(), format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Errors raised by the effect engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "internal inconsistency at level {level}: log TCE = {tce} but log NDE + log NIE = {sum}"
    )]
    Decomposition { level: usize, tce: f64, sum: f64 },
}

/// Errors raised by maximum-likelihood fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("mediator takes only the value {0} in the data")]
    ConstantMediator(u8),
    #[error("outcome level {0} is not observed in the data")]
    EmptyCategory(usize),
    #[error("design matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },
    #[error("likelihood keeps increasing while parameters diverge (norm {norm:.3e}); the data appear separated")]
    Separation { norm: f64 },
    #[error(
        "no convergence after {iterations} iterations (gradient max-norm {gradient_norm:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },
    #[error("fitted thresholds are not strictly increasing at index {0}")]
    ThresholdOrdering(usize),
    #[error("observation {row} has zero probability under the model")]
    ZeroProbability { row: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("all {0} replicates failed")]
    AllReplicatesFailed(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error("number of bootstrap samples must be at least 1")]
    NoResamples,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("quantile of an empty sample")]
    EmptySample,
    #[error("quantile probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("all {0} bootstrap resamples failed")]
    AllResamplesFailed(usize),
}
