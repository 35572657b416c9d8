//! Maximum-likelihood fitting of the mediator and outcome models.
//!
//! Both fits run Newton-Raphson on the full parameter vector with a
//! step-halving line search. Standard errors come from the inverse observed
//! information at the optimum.

mod logistic;
mod newton;
mod ordinal;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::EstimationError;

pub use logistic::{
    fit_logistic, fit_mediator, fit_mediator_with, loglik_mediator, mediator_score,
};
pub use ordinal::{fit_outcome, fit_outcome_with, loglik_outcome, outcome_score};

/// Optimiser settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once the gradient max-norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop once an accepted step improves the log-likelihood by less than
    /// this fraction of its magnitude.
    pub relative_loglik_tolerance: f64,
    /// A fit stopped by the relative-change rule is accepted only if its
    /// gradient max-norm is within this bound.
    pub stalled_gradient_tolerance: f64,
    pub max_halvings: usize,
    /// Parameter max-norm beyond which an improving likelihood signals separation.
    pub divergence_norm: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-8,
            relative_loglik_tolerance: 1e-12,
            stalled_gradient_tolerance: 1e-6,
            max_halvings: 30,
            divergence_norm: 1e3,
        }
    }
}

/// A converged maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<M> {
    pub model: M,
    pub loglik: f64,
    /// Max-norm of the log-likelihood gradient in the natural parameters.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Aligned with the model's `to_params()` order; NaN when the observed
    /// information is not positive definite.
    pub standard_errors: Vec<f64>,
    pub converged: bool,
}

/// Rank of a design matrix given as rows, judged from the eigenvalues of
/// its cross-product.
pub(crate) fn design_rank(rows: &[Vec<f64>]) -> usize {
    let p = rows.first().map_or(0, Vec::len);
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    for r in rows {
        for a in 0..p {
            for b in 0..=a {
                xtx[(a, b)] += r[a] * r[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(b, a)] = xtx[(a, b)];
        }
    }
    // Equilibrate so the test does not depend on column scale.
    let d: Vec<f64> = (0..p).map(|i| xtx[(i, i)].sqrt()).collect();
    for a in 0..p {
        for b in 0..p {
            let s = d[a] * d[b];
            xtx[(a, b)] = if s > 0.0 { xtx[(a, b)] / s } else { 0.0 };
        }
    }
    let eig = SymmetricEigen::new(xtx).eigenvalues;
    let max = eig.iter().cloned().fold(0.0, f64::max);
    eig.iter().filter(|&&v| v > max * 1e-12).count()
}

pub(crate) fn check_rank(rows: &[Vec<f64>]) -> Result<(), EstimationError> {
    let columns = rows.first().map_or(0, Vec::len);
    let rank = design_rank(rows);
    if rank < columns {
        Err(EstimationError::RankDeficient { rank, columns })
    } else {
        Ok(())
    }
}
