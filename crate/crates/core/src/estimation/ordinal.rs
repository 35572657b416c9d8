//! Proportional-odds cumulative logit regression.
//!
//! The optimiser works on `theta = (alpha_1, delta_2..delta_K, beta...)`
//! with `alpha_j = alpha_{j-1} + exp(delta_j)`, so every iterate keeps the
//! thresholds strictly ordered. Likelihood derivatives are computed in the
//! natural parameters `(alpha, beta)` and mapped through the chain rule.

use nalgebra::{DMatrix, DVector};

use super::newton::{inverse_information, maximize, Evaluation, Objective};
use super::{check_rank, FitOptions, FitResult};
use crate::data::Dataset;
use crate::error::{EstimationError, ModelError};
use crate::math::{expit, logit, softplus};
use crate::model::OutcomeModel;

/// Log of `expit(a) - expit(b)` for `a > b`, without cancellation.
fn log_expit_diff(a: f64, b: f64) -> f64 {
    -softplus(-a) - softplus(b) + (-(b - a).exp_m1()).ln()
}

/// Log-probability of category `y` (1-based) given thresholds and predictor.
fn log_category_probability(alpha: &[f64], eta: f64, y: usize) -> f64 {
    let k = alpha.len();
    if y == 1 {
        -softplus(eta - alpha[0])
    } else if y == k + 1 {
        -softplus(alpha[k - 1] - eta)
    } else {
        log_expit_diff(alpha[y - 1] - eta, alpha[y - 2] - eta)
    }
}

struct Ordinal<'a> {
    data: &'a Dataset,
    /// Regressor rows `(x, m, x m, c...)`.
    rows: Vec<Vec<f64>>,
    thresholds: usize,
}

impl<'a> Ordinal<'a> {
    fn new(data: &'a Dataset) -> Self {
        let rows = data
            .records()
            .iter()
            .map(|r| {
                let m = f64::from(r.m);
                let mut row = Vec::with_capacity(3 + r.c.len());
                row.extend_from_slice(&[r.x, m, r.x * m]);
                row.extend_from_slice(&r.c);
                row
            })
            .collect();
        Ordinal {
            data,
            rows,
            thresholds: data.levels() - 1,
        }
    }

    fn predictor(row: &[f64], beta: &[f64]) -> f64 {
        row.iter().zip(beta).map(|(a, b)| a * b).sum()
    }

    /// Natural parameters `(alpha, beta)` from optimiser coordinates.
    fn natural(&self, theta: &DVector<f64>) -> Vec<f64> {
        let k = self.thresholds;
        let mut phi: Vec<f64> = theta.iter().copied().collect();
        for j in 1..k {
            phi[j] = phi[j - 1] + theta[j].exp();
        }
        phi
    }

    fn coordinates(&self, phi: &[f64]) -> DVector<f64> {
        let k = self.thresholds;
        let mut theta = phi.to_vec();
        for j in 1..k {
            theta[j] = (phi[j] - phi[j - 1]).ln();
        }
        DVector::from_vec(theta)
    }

    /// Jacobian `d phi / d theta`.
    fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let k = self.thresholds;
        let p = theta.len();
        let mut jac = DMatrix::identity(p, p);
        for j in 0..k {
            jac[(j, 0)] = 1.0;
            for l in 1..=j {
                jac[(j, l)] = theta[l].exp();
            }
        }
        jac
    }

    fn loglik_natural(&self, phi: &[f64]) -> f64 {
        let k = self.thresholds;
        let (alpha, beta) = phi.split_at(k);
        self.rows
            .iter()
            .zip(self.data.records())
            .map(|(row, r)| log_category_probability(alpha, Self::predictor(row, beta), r.y))
            .sum()
    }

    /// Log-likelihood, gradient and Hessian in the natural parameters.
    fn derivatives_natural(&self, phi: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let k = self.thresholds;
        let p = phi.len();
        let q = p - k;
        let (alpha, beta) = phi.split_at(k);
        let mut loglik = 0.0;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);

        for (row, r) in self.rows.iter().zip(self.data.records()) {
            let eta = Self::predictor(row, beta);
            let logp = log_category_probability(alpha, eta, r.y);
            loglik += logp;
            let prob = logp.exp();
            // Upper threshold index y-1 (if y <= K), lower y-2 (if y >= 2).
            let upper = (r.y <= k).then(|| r.y - 1);
            let lower = (r.y >= 2).then(|| r.y - 2);
            let density = |idx: Option<usize>| match idx {
                Some(i) => {
                    let f = expit(alpha[i] - eta);
                    let d = f * (1.0 - f);
                    (d, d * (1.0 - 2.0 * f))
                }
                None => (0.0, 0.0),
            };
            let (fu, dfu) = density(upper);
            let (fl, dfl) = density(lower);
            let inv = 1.0 / prob;
            let d_eta = -(fu - fl) * inv;
            let h_eta = (dfu - dfl) * inv - d_eta * d_eta;

            if let Some(u) = upper {
                grad[u] += fu * inv;
                hess[(u, u)] += dfu * inv - (fu * inv).powi(2);
                let cross = -dfu * inv + fu * (fu - fl) * inv * inv;
                for a in 0..q {
                    hess[(u, k + a)] += cross * row[a];
                }
            }
            if let Some(l) = lower {
                grad[l] -= fl * inv;
                hess[(l, l)] += -dfl * inv - (fl * inv).powi(2);
                let cross = dfl * inv - fl * (fu - fl) * inv * inv;
                for a in 0..q {
                    hess[(l, k + a)] += cross * row[a];
                }
            }
            if let (Some(u), Some(l)) = (upper, lower) {
                hess[(u, l)] += fu * fl * inv * inv;
            }
            for a in 0..q {
                grad[k + a] += d_eta * row[a];
                for b in 0..=a {
                    hess[(k + a, k + b)] += h_eta * row[a] * row[b];
                }
            }
        }
        // Fill the symmetric counterpart of every entry accumulated above.
        for a in 0..p {
            for b in 0..a {
                let v = hess[(a, b)] + hess[(b, a)];
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        (loglik, grad, hess)
    }
}

impl Objective for Ordinal<'_> {
    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let phi = self.natural(theta);
        if phi.iter().any(|v| !v.is_finite())
            || phi[..self.thresholds].windows(2).any(|w| w[0] >= w[1])
        {
            return f64::NEG_INFINITY;
        }
        self.loglik_natural(&phi)
    }

    fn evaluate(&self, theta: &DVector<f64>) -> Evaluation {
        let k = self.thresholds;
        let phi = self.natural(theta);
        let (loglik, grad, hess) = self.derivatives_natural(&phi);
        let jac = self.jacobian(theta);
        let gradient = jac.transpose() * &grad;
        let mut hessian = jac.transpose() * &hess * &jac;
        // Second derivatives of alpha_j in delta_l are exp(delta_l) for l <= j.
        for l in 1..k {
            let tail: f64 = (l..k).map(|j| grad[j]).sum();
            hessian[(l, l)] += theta[l].exp() * tail;
        }
        Evaluation {
            loglik,
            gradient,
            hessian,
            gradient_norm: grad.amax(),
        }
    }

    fn parameter_norm(&self, theta: &DVector<f64>) -> f64 {
        self.natural(theta).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_outcome_dim(model: &OutcomeModel, data: &Dataset) -> Result<(), ModelError> {
    if model.dim() != data.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: model.dim(),
            found: data.dim(),
        });
    }
    if model.levels() != data.levels() {
        return Err(ModelError::LevelOutOfRange {
            level: data.levels() - 1,
            max: model.levels() - 1,
        });
    }
    Ok(())
}

/// Multinomial log-likelihood of the outcome under the cumulative logit model.
///
/// Returns [`EstimationError::ZeroProbability`] for the first record whose
/// category probability underflows to zero.
pub fn loglik_outcome(model: &OutcomeModel, data: &Dataset) -> Result<f64, EstimationError> {
    check_outcome_dim(model, data)?;
    let ord = Ordinal::new(data);
    let phi = model.to_params();
    let (alpha, beta) = phi.split_at(ord.thresholds);
    let mut total = 0.0;
    for (row_index, (row, r)) in ord.rows.iter().zip(data.records()).enumerate() {
        let lp = log_category_probability(alpha, Ordinal::predictor(row, beta), r.y);
        if lp == f64::NEG_INFINITY {
            return Err(EstimationError::ZeroProbability { row: row_index });
        }
        total += lp;
    }
    Ok(total)
}

/// Analytic gradient of [`loglik_outcome`] in `to_params()` order.
pub fn outcome_score(model: &OutcomeModel, data: &Dataset) -> Result<Vec<f64>, EstimationError> {
    check_outcome_dim(model, data)?;
    let ord = Ordinal::new(data);
    let (_, grad, _) = ord.derivatives_natural(&model.to_params());
    Ok(grad.iter().copied().collect())
}

/// Maximum-likelihood fit of the proportional-odds outcome model.
pub fn fit_outcome(data: &Dataset) -> Result<FitResult<OutcomeModel>, EstimationError> {
    fit_outcome_with(data, &FitOptions::default())
}

pub fn fit_outcome_with(
    data: &Dataset,
    options: &FitOptions,
) -> Result<FitResult<OutcomeModel>, EstimationError> {
    let counts = data.level_counts();
    if let Some(level) = counts.iter().position(|&n| n == 0) {
        return Err(EstimationError::EmptyCategory(level + 1));
    }
    let ord = Ordinal::new(data);
    let k = ord.thresholds;
    let rank_rows: Vec<Vec<f64>> = ord
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![1.0];
            row.extend_from_slice(r);
            row
        })
        .collect();
    check_rank(&rank_rows)?;

    // Thresholds start at the empirical cumulative logits, slopes at zero.
    let n = data.len() as f64;
    let mut start = vec![0.0; k + 3 + data.dim()];
    let mut cum = 0usize;
    for j in 0..k {
        cum += counts[j];
        start[j] = logit(cum as f64 / n);
    }
    let theta0 = ord.coordinates(&start);
    let sol = maximize(&ord, theta0, options)?;

    let phi = ord.natural(&sol.theta);
    if let Some(i) = phi[..k].windows(2).position(|w| w[0] >= w[1]) {
        return Err(EstimationError::ThresholdOrdering(i + 1));
    }
    // Delta method: Cov(phi) = J Cov(theta) J'.
    let p = phi.len();
    let standard_errors = match inverse_information(&sol.eval.hessian) {
        Some(cov_theta) => {
            let jac = ord.jacobian(&sol.theta);
            let cov = &jac * cov_theta * jac.transpose();
            (0..p).map(|i| cov[(i, i)].sqrt()).collect()
        }
        None => vec![f64::NAN; p],
    };
    Ok(FitResult {
        model: OutcomeModel::from_params(&phi, data.levels())?,
        loglik: sol.eval.loglik,
        gradient_norm: sol.eval.gradient_norm,
        iterations: sol.iterations,
        standard_errors,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{validate_dataset, RawRecord};

    fn dataset(rows: &[(f64, u8, usize)], levels: usize) -> Dataset {
        let raw: Vec<RawRecord> = rows
            .iter()
            .map(|&(x, m, y)| RawRecord {
                x,
                m: f64::from(m),
                y: y as f64,
                c: vec![],
            })
            .collect();
        validate_dataset(&raw, levels, 0).unwrap()
    }

    #[test]
    fn log_expit_diff_matches_naive() {
        for (a, b) in [(1.0, -1.0), (0.3, 0.2), (5.0, -3.0), (-2.0, -4.5)] {
            let naive = (expit(a) - expit(b)).ln();
            assert!((log_expit_diff(a, b) - naive).abs() < 1e-12);
        }
        // Far tail where the naive form cancels to zero.
        assert!(log_expit_diff(40.0, 39.0).is_finite());
    }

    #[test]
    fn loglik_single_record() {
        // alpha = (0, log 3): P(Y <= 2) = 0.75, so P(Y = 3) = 0.25 at eta = 0.
        let model = OutcomeModel::new(vec![0.0, 3f64.ln()], 0.0, 0.0, 0.0, vec![]).unwrap();
        let data = dataset(&[(1.0, 0, 3)], 3);
        assert!((loglik_outcome(&model, &data).unwrap() - 0.25f64.ln()).abs() < 1e-14);
        let data = dataset(&[(1.0, 1, 2)], 3);
        assert!((loglik_outcome(&model, &data).unwrap() - 0.25f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn loglik_is_additive() {
        let model = OutcomeModel::new(vec![-0.5, 1.0], 0.3, -0.4, 0.2, vec![]).unwrap();
        let rows = [(0.5, 0, 1), (1.5, 1, 3), (-0.2, 1, 2), (2.0, 0, 3)];
        let once = loglik_outcome(&model, &dataset(&rows, 3)).unwrap();
        let doubled: Vec<_> = rows.iter().chain(rows.iter()).copied().collect();
        let twice = loglik_outcome(&model, &dataset(&doubled, 3)).unwrap();
        assert!((twice - 2.0 * once).abs() <= 1e-14 * once.abs());
    }

    #[test]
    fn zero_probability_flagged() {
        // Far tails stay finite in log space; only an overflowing predictor
        // drives a probability to exactly zero.
        let model = OutcomeModel::new(vec![0.0, 1.0], 1e10, 0.0, 0.0, vec![]).unwrap();
        let data = dataset(&[(1000.0, 0, 1), (1e300, 0, 1)], 3);
        assert!(loglik_outcome(&model, &dataset(&[(1000.0, 0, 1)], 3))
            .unwrap()
            .is_finite());
        assert_eq!(
            loglik_outcome(&model, &data),
            Err(EstimationError::ZeroProbability { row: 1 })
        );
    }

    #[test]
    fn empty_category_rejected() {
        let data = dataset(&[(0.0, 0, 1), (1.0, 1, 3), (2.0, 0, 1), (0.5, 1, 3)], 3);
        assert_eq!(
            fit_outcome(&data).unwrap_err(),
            EstimationError::EmptyCategory(2)
        );
    }

    #[test]
    fn mismatched_levels_rejected() {
        let model = OutcomeModel::new(vec![0.0], 0.0, 0.0, 0.0, vec![]).unwrap();
        let data = dataset(&[(0.0, 0, 1)], 3);
        assert!(loglik_outcome(&model, &data).is_err());
    }

    #[test]
    fn reparameterisation_round_trip() {
        let data = dataset(&[(0.0, 0, 1), (1.0, 1, 2), (2.0, 0, 3), (0.5, 1, 4)], 4);
        let ord = Ordinal::new(&data);
        let phi = vec![-1.0, 0.25, 2.0, 0.1, 0.2, 0.3];
        let back = ord.natural(&ord.coordinates(&phi));
        for (a, b) in phi.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_gradient() {
        let rows: Vec<(f64, u8, usize)> = (0..40)
            .map(|i| {
                let x = (i as f64) * 0.17 - 2.0;
                let m = (i % 3 == 0) as u8;
                (x, m, 1 + (i * 7 + 3) % 4)
            })
            .collect();
        let data = dataset(&rows, 4);
        let ord = Ordinal::new(&data);
        let theta = DVector::from_vec(vec![-0.8, -0.3, 0.2, 0.4, -0.5, 0.3]);
        let eval = ord.evaluate(&theta);
        let h = 1e-5;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            up[i] += h;
            let mut dn = theta.clone();
            dn[i] -= h;
            let gu = ord.evaluate(&up).gradient;
            let gd = ord.evaluate(&dn).gradient;
            for r in 0..theta.len() {
                let fd = (gu[r] - gd[r]) / (2.0 * h);
                let an = eval.hessian[(r, i)];
                assert!(
                    (fd - an).abs() < 1e-5 * an.abs().max(1.0),
                    "H[{r},{i}] {an} vs {fd}"
                );
            }
        }
    }
}
