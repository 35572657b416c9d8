//! Newton-Raphson maximisation with step halving.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::FitOptions;
use crate::error::EstimationError;

/// Newton steps longer than this (max-norm) mean the optimum has not been
/// located, whatever the gradient says. Under separation the gradient
/// vanishes while every Newton step stays of order one.
const STEP_TOLERANCE: f64 = 1e-2;

/// Relative rounding error allowed in a summed log-likelihood.
const LOGLIK_ROUNDING: f64 = 1e-13;

/// Log-likelihood value and derivatives in the optimiser's coordinates.
pub(crate) struct Evaluation {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Max-norm of the gradient in the model's natural parameters.
    pub gradient_norm: f64,
}

pub(crate) trait Objective {
    /// Log-likelihood, `-inf` where some observation has zero probability.
    fn loglik(&self, theta: &DVector<f64>) -> f64;

    fn evaluate(&self, theta: &DVector<f64>) -> Evaluation;

    /// Max-norm of the natural parameters, used to detect divergence.
    fn parameter_norm(&self, theta: &DVector<f64>) -> f64 {
        theta.amax()
    }
}

pub(crate) struct NewtonSolution {
    pub theta: DVector<f64>,
    pub eval: Evaluation,
    pub iterations: usize,
}

/// Ascent direction: the Newton step when `-H` is positive definite,
/// otherwise a Levenberg-damped step that interpolates towards the gradient.
/// The flag is false for a damped step.
fn ascent_direction(eval: &Evaluation) -> (DVector<f64>, bool) {
    let info = -&eval.hessian;
    if let Some(chol) = Cholesky::new(info.clone()) {
        return (chol.solve(&eval.gradient), true);
    }
    let n = info.nrows();
    let scale = (0..n).map(|i| info[(i, i)].abs()).fold(1e-8, f64::max);
    let mut lambda = scale * 1e-6;
    for _ in 0..40 {
        let damped = &info + DMatrix::identity(n, n) * lambda;
        if let Some(chol) = Cholesky::new(damped) {
            return (chol.solve(&eval.gradient), false);
        }
        lambda *= 10.0;
    }
    (&eval.gradient / scale, false)
}

/// Max-norm of a direction, infinite for a damped one so that it never
/// passes the step test.
fn newton_step_norm(direction: &DVector<f64>, newton: bool) -> f64 {
    if newton {
        direction.amax()
    } else {
        f64::INFINITY
    }
}

pub(crate) fn maximize<O: Objective>(
    objective: &O,
    start: DVector<f64>,
    options: &FitOptions,
) -> Result<NewtonSolution, EstimationError> {
    let mut theta = start;
    let mut eval = objective.evaluate(&theta);
    if !eval.loglik.is_finite() {
        return Err(EstimationError::NonConvergence {
            iterations: 0,
            gradient_norm: f64::NAN,
        });
    }
    let mut iteration = 0;
    loop {
        let (direction, newton) = ascent_direction(&eval);
        let step_norm = newton_step_norm(&direction, newton);
        if eval.gradient_norm <= options.gradient_tolerance && step_norm <= STEP_TOLERANCE {
            return Ok(polish(objective, theta, eval, &direction, iteration));
        }
        if iteration == options.max_iterations {
            return Err(give_up(objective, &theta, &eval, step_norm, iteration));
        }
        iteration += 1;

        // Near the optimum the improvement falls below the rounding error of
        // the summed log-likelihood, so steps within that error are accepted.
        let floor = eval.loglik - LOGLIK_ROUNDING * eval.loglik.abs().max(1.0);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let candidate = &theta + &direction * step;
            let ll = objective.loglik(&candidate);
            if ll.is_finite() && ll >= floor {
                accepted = Some((candidate, ll));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, ll)) = accepted else {
            // No improving step left: the likelihood is flat to round-off.
            return stalled(objective, theta, eval, step_norm, iteration, options);
        };
        let change = (ll - eval.loglik) / eval.loglik.abs().max(f64::MIN_POSITIVE);
        let norm = objective.parameter_norm(&candidate);
        if norm > options.divergence_norm && ll > eval.loglik {
            return Err(EstimationError::Separation { norm });
        }
        theta = candidate;
        eval = objective.evaluate(&theta);
        if change <= options.relative_loglik_tolerance {
            let (direction, newton) = ascent_direction(&eval);
            let step_norm = newton_step_norm(&direction, newton);
            if eval.gradient_norm <= options.stalled_gradient_tolerance
                && step_norm <= STEP_TOLERANCE
            {
                return Ok(polish(objective, theta, eval, &direction, iteration));
            }
        }
    }
}

/// One last full Newton step from a converged point, kept only if it does
/// not increase the gradient. This pins the estimate to the optimum to
/// round-off, independently of the path taken to reach it.
fn polish<O: Objective>(
    objective: &O,
    theta: DVector<f64>,
    eval: Evaluation,
    direction: &DVector<f64>,
    iterations: usize,
) -> NewtonSolution {
    let candidate = &theta + direction;
    let next = objective.evaluate(&candidate);
    if next.loglik.is_finite() && next.gradient_norm <= eval.gradient_norm {
        NewtonSolution {
            theta: candidate,
            eval: next,
            iterations,
        }
    } else {
        NewtonSolution {
            theta,
            eval,
            iterations,
        }
    }
}

fn stalled<O: Objective>(
    objective: &O,
    theta: DVector<f64>,
    eval: Evaluation,
    step_norm: f64,
    iterations: usize,
    options: &FitOptions,
) -> Result<NewtonSolution, EstimationError> {
    if eval.gradient_norm <= options.stalled_gradient_tolerance && step_norm <= STEP_TOLERANCE {
        Ok(NewtonSolution {
            theta,
            eval,
            iterations,
        })
    } else {
        Err(give_up(objective, &theta, &eval, step_norm, iterations))
    }
}

fn give_up<O: Objective>(
    objective: &O,
    theta: &DVector<f64>,
    eval: &Evaluation,
    step_norm: f64,
    iterations: usize,
) -> EstimationError {
    // Vanishing gradient while Newton steps refuse to shrink or the
    // information degenerates: the supremum lies at infinity.
    let degenerate = step_norm > STEP_TOLERANCE || Cholesky::new(-&eval.hessian).is_none();
    if degenerate && eval.gradient_norm < 1e-3 {
        EstimationError::Separation {
            norm: objective.parameter_norm(theta),
        }
    } else {
        EstimationError::NonConvergence {
            iterations,
            gradient_norm: eval.gradient_norm,
        }
    }
}

/// Inverse of the observed information `-H`, if positive definite.
pub(crate) fn inverse_information(hessian: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(-hessian).map(|c| c.inverse())
}
