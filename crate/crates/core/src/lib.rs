//! Counterfactual mediation analysis for an ordinal outcome and a binary
//! mediator.
//!
//! The mediator follows a logistic regression on the exposure `X` and
//! covariates `C`; the outcome follows a proportional-odds cumulative logit
//! model on `X`, `M`, their product and `C`. Under these two models the
//! total, controlled direct, natural direct and natural indirect effects on
//! the log-odds scale have exact closed forms, evaluated in [`effects`].
//!
//! - [`model`] and [`data`]: the two models and validated observations.
//! - [`effects`]: closed-form effects and an independent plug-in evaluator.
//! - [`estimation`]: maximum-likelihood fitting by Newton-Raphson.
//! - [`simulation`]: synthetic datasets and Monte Carlo studies.
//! - [`inference`]: percentile bootstrap intervals.

pub mod data;
pub mod effects;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod math;
pub mod model;
pub mod rng;
pub mod simulation;

pub use data::{validate_dataset, Dataset, ObservationRecord, RawRecord};
pub use effects::{effect_table, EffectKey, EffectKind, EffectQuery, EffectTable};
pub use error::{
    DatasetError, EffectError, EstimationError, InferenceError, ModelError, SimulationError,
    Violation,
};
pub use estimation::{fit_mediator, fit_outcome, FitOptions, FitResult};
pub use inference::{
    bootstrap_effects, point_estimate, quantile, BootstrapEntry, BootstrapResult, PointEstimate,
};
pub use model::{MediatorModel, ModelParameters, OutcomeModel};
pub use simulation::{
    monte_carlo_study, simulate_dataset, simulate_replicate, CovariateGenerator, SimulationDesign,
    StudySummary,
};
