//! Binary logistic regression: the mediator model, and a general-purpose
//! fitter over an arbitrary design.

use nalgebra::{DMatrix, DVector};

use super::newton::{inverse_information, maximize, Evaluation, Objective};
use super::{check_rank, FitOptions, FitResult};
use crate::data::Dataset;
use crate::error::{EstimationError, ModelError};
use crate::math::{expit, softplus};
use crate::model::MediatorModel;

struct Logistic<'a> {
    rows: &'a [Vec<f64>],
    response: &'a [bool],
}

impl Logistic<'_> {
    fn predictor(row: &[f64], theta: &DVector<f64>) -> f64 {
        row.iter().zip(theta.iter()).map(|(a, b)| a * b).sum()
    }
}

impl Objective for Logistic<'_> {
    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        self.rows
            .iter()
            .zip(self.response)
            .map(|(row, &y)| {
                let eta = Self::predictor(row, theta);
                if y {
                    -softplus(-eta)
                } else {
                    -softplus(eta)
                }
            })
            .sum()
    }

    fn evaluate(&self, theta: &DVector<f64>) -> Evaluation {
        let p = theta.len();
        let mut loglik = 0.0;
        let mut gradient = DVector::zeros(p);
        let mut hessian = DMatrix::zeros(p, p);
        for (row, &y) in self.rows.iter().zip(self.response) {
            let eta = Self::predictor(row, theta);
            let mu = expit(eta);
            loglik += if y { -softplus(-eta) } else { -softplus(eta) };
            let resid = if y { 1.0 - mu } else { -mu };
            let w = mu * (1.0 - mu);
            for a in 0..p {
                gradient[a] += resid * row[a];
                for b in 0..=a {
                    hessian[(a, b)] -= w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hessian[(b, a)] = hessian[(a, b)];
            }
        }
        let gradient_norm = gradient.amax();
        Evaluation {
            loglik,
            gradient,
            hessian,
            gradient_norm,
        }
    }
}

/// Logistic regression of `response` on the design `rows` (include a
/// column of ones for an intercept). Coefficients are aligned with columns.
pub fn fit_logistic(
    rows: &[Vec<f64>],
    response: &[bool],
    options: &FitOptions,
) -> Result<FitResult<Vec<f64>>, EstimationError> {
    let p = rows.first().map_or(0, Vec::len);
    let ones = response.iter().filter(|&&y| y).count();
    if ones == 0 {
        return Err(EstimationError::ConstantMediator(0));
    }
    if ones == response.len() {
        return Err(EstimationError::ConstantMediator(1));
    }
    check_rank(rows)?;
    let objective = Logistic { rows, response };
    let sol = maximize(&objective, DVector::zeros(p), options)?;
    let standard_errors = match inverse_information(&sol.eval.hessian) {
        Some(cov) => (0..p).map(|i| cov[(i, i)].sqrt()).collect(),
        None => vec![f64::NAN; p],
    };
    Ok(FitResult {
        model: sol.theta.iter().copied().collect(),
        loglik: sol.eval.loglik,
        gradient_norm: sol.eval.gradient_norm,
        iterations: sol.iterations,
        standard_errors,
        converged: true,
    })
}

fn mediator_design(data: &Dataset) -> (Vec<Vec<f64>>, Vec<bool>) {
    let rows = data
        .records()
        .iter()
        .map(|r| {
            let mut row = Vec::with_capacity(2 + r.c.len());
            row.push(1.0);
            row.push(r.x);
            row.extend_from_slice(&r.c);
            row
        })
        .collect();
    let response = data.records().iter().map(|r| r.m == 1).collect();
    (rows, response)
}

/// Maximum-likelihood fit of `logit P(M=1) = gamma0 + gamma_x x + gamma_c . c`.
pub fn fit_mediator(data: &Dataset) -> Result<FitResult<MediatorModel>, EstimationError> {
    fit_mediator_with(data, &FitOptions::default())
}

pub fn fit_mediator_with(
    data: &Dataset,
    options: &FitOptions,
) -> Result<FitResult<MediatorModel>, EstimationError> {
    let (rows, response) = mediator_design(data);
    let fit = fit_logistic(&rows, &response, options)?;
    Ok(FitResult {
        model: MediatorModel::from_params(&fit.model)?,
        loglik: fit.loglik,
        gradient_norm: fit.gradient_norm,
        iterations: fit.iterations,
        standard_errors: fit.standard_errors,
        converged: fit.converged,
    })
}

fn check_mediator_dim(model: &MediatorModel, data: &Dataset) -> Result<(), ModelError> {
    if model.dim() != data.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: model.dim(),
            found: data.dim(),
        });
    }
    Ok(())
}

/// Bernoulli log-likelihood of the mediator values.
pub fn loglik_mediator(model: &MediatorModel, data: &Dataset) -> Result<f64, EstimationError> {
    check_mediator_dim(model, data)?;
    let (rows, response) = mediator_design(data);
    let theta = DVector::from_vec(model.to_params());
    Ok(Logistic {
        rows: &rows,
        response: &response,
    }
    .loglik(&theta))
}

/// Analytic gradient of [`loglik_mediator`] in `to_params()` order.
pub fn mediator_score(model: &MediatorModel, data: &Dataset) -> Result<Vec<f64>, EstimationError> {
    check_mediator_dim(model, data)?;
    let (rows, response) = mediator_design(data);
    let theta = DVector::from_vec(model.to_params());
    let eval = Logistic {
        rows: &rows,
        response: &response,
    }
    .evaluate(&theta);
    Ok(eval.gradient.iter().copied().collect())
}
