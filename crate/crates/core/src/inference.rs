//! Percentile bootstrap intervals for the effect table.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::effects::{effect_table, EffectKey, EffectQuery, EffectTable};
use crate::error::{EstimationError, InferenceError};
use crate::estimation::{fit_mediator, fit_outcome, FitResult};
use crate::model::{MediatorModel, OutcomeModel};
use crate::rng::{stream, StreamRole};
use crate::simulation::mean_sd;

/// Default number of bootstrap samples.
pub const DEFAULT_RESAMPLES: usize = 1000;

/// Default confidence level.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Empirical quantile of an ascending sample by linear interpolation
/// between order statistics: `h = (n - 1) q`, interpolating between
/// `sorted[floor(h)]` and `sorted[floor(h) + 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> Result<f64, InferenceError> {
    if sorted.is_empty() {
        return Err(InferenceError::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(InferenceError::InvalidProbability(q));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Row indices drawn with replacement for resample `index`.
pub fn resample_indices(seed: u64, index: u64, n: usize) -> Vec<usize> {
    let mut rng = stream(seed, index, StreamRole::Resample);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Full-data fits of both models and the resulting effect table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimate {
    pub mediator: FitResult<MediatorModel>,
    pub outcome: FitResult<OutcomeModel>,
    pub table: EffectTable,
}

/// Fits both models to `data` and evaluates the effect table at `query`.
pub fn point_estimate(
    data: &Dataset,
    query: &EffectQuery,
) -> Result<PointEstimate, InferenceError> {
    let mediator = fit_mediator(data)?;
    let outcome = fit_outcome(data)?;
    let table = effect_table(query, &mediator.model, &outcome.model)?;
    Ok(PointEstimate {
        mediator,
        outcome,
        table,
    })
}

/// Bootstrap summary of one effect entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapEntry {
    pub key: EffectKey,
    /// Estimate from the full data.
    pub estimate: f64,
    /// Sample standard deviation over successful resamples; absent with
    /// fewer than two.
    pub boot_sd: Option<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub point: PointEstimate,
    pub entries: Vec<BootstrapEntry>,
    pub resamples: usize,
    pub level: f64,
    pub failures: usize,
    /// More than half of the resamples failed.
    pub unreliable: bool,
    /// Successful resample tables in resample order.
    pub estimates: Vec<EffectTable>,
}

impl BootstrapResult {
    pub fn entry(&self, key: EffectKey) -> Option<&BootstrapEntry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

fn refit(data: &Dataset, query: &EffectQuery) -> Result<EffectTable, InferenceError> {
    if let Some(&level) = data.missing_levels().first() {
        return Err(EstimationError::EmptyCategory(level).into());
    }
    let mediator = fit_mediator(data)?;
    let outcome = fit_outcome(data)?;
    Ok(effect_table(query, &mediator.model, &outcome.model)?)
}

/// Percentile bootstrap over `resamples` row-wise resamples of `data`.
///
/// Resample `b` draws its rows from a stream keyed by `(seed, b)`.
/// Resamples whose refit fails (a missing outcome level, a constant
/// mediator, separation) are excluded and counted. Bounds are the
/// `(1 - level) / 2` and `(1 + level) / 2` quantiles of each entry.
pub fn bootstrap_effects(
    data: &Dataset,
    query: &EffectQuery,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult, InferenceError> {
    if resamples == 0 {
        return Err(InferenceError::NoResamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(InferenceError::InvalidLevel(level));
    }
    let point = point_estimate(data, query)?;
    let n = data.len();
    let results: Vec<Option<EffectTable>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let sample = data.select(&resample_indices(seed, b as u64, n));
            refit(&sample, query).ok()
        })
        .collect();
    let estimates: Vec<EffectTable> = results.into_iter().flatten().collect();
    let failures = resamples - estimates.len();
    if estimates.is_empty() {
        return Err(InferenceError::AllResamplesFailed(resamples));
    }
    let tail = (1.0 - level) / 2.0;
    let mut entries = Vec::new();
    for key in point.table.keys() {
        let mut values: Vec<f64> = estimates.iter().map(|t| t.get(key)).collect();
        let (_, boot_sd) = mean_sd(&values);
        values.sort_by(f64::total_cmp);
        entries.push(BootstrapEntry {
            key,
            estimate: point.table.get(key),
            boot_sd,
            lower: quantile(&values, tail)?,
            upper: quantile(&values, 1.0 - tail)?,
        });
    }
    Ok(BootstrapResult {
        point,
        entries,
        resamples,
        level,
        failures,
        unreliable: 2 * failures > resamples,
        estimates,
    })
}
