//! The two parametric models: a logistic regression for the binary
//! mediator and a proportional-odds cumulative logit for the ordinal
//! outcome.
//!
//! Outcome levels are coded `1..=J`; threshold indices run over `1..=J-1`.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::math::{dot, expit};

fn check_finite(v: f64, name: &'static str) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite(name))
    }
}

fn check_dim(expected: usize, c: &[f64]) -> Result<(), ModelError> {
    if expected == c.len() {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            expected,
            found: c.len(),
        })
    }
}

/// `logit P(M=1 | x, c) = gamma0 + gamma_x * x + gamma_c . c`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediatorModel {
    gamma0: f64,
    gamma_x: f64,
    gamma_c: Vec<f64>,
}

impl MediatorModel {
    pub fn new(gamma0: f64, gamma_x: f64, gamma_c: Vec<f64>) -> Result<Self, ModelError> {
        check_finite(gamma0, "gamma0")?;
        check_finite(gamma_x, "gammaX")?;
        for &g in &gamma_c {
            check_finite(g, "gammaC")?;
        }
        Ok(Self {
            gamma0,
            gamma_x,
            gamma_c,
        })
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma_x(&self) -> f64 {
        self.gamma_x
    }

    pub fn gamma_c(&self) -> &[f64] {
        &self.gamma_c
    }

    /// Number of covariates.
    pub fn dim(&self) -> usize {
        self.gamma_c.len()
    }

    /// Parameters in the order `(gamma0, gamma_x, gamma_c...)`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut v = vec![self.gamma0, self.gamma_x];
        v.extend_from_slice(&self.gamma_c);
        v
    }

    pub fn from_params(params: &[f64]) -> Result<Self, ModelError> {
        if params.len() < 2 {
            return Err(ModelError::DimensionMismatch {
                expected: 2,
                found: params.len(),
            });
        }
        Self::new(params[0], params[1], params[2..].to_vec())
    }

    /// Mediator log-odds at `(x, c)`.
    pub fn linear_predictor(&self, x: f64, c: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.dim(), c)?;
        Ok(self.gamma0 + self.gamma_x * x + dot(&self.gamma_c, c))
    }

    /// `P(M = 1 | x, c)`.
    pub fn probability(&self, x: f64, c: &[f64]) -> Result<f64, ModelError> {
        Ok(expit(self.linear_predictor(x, c)?))
    }

    /// `P(M = m | x, c)` for `m` in {0, 1}, each branch evaluated directly.
    pub fn probability_of(&self, m: u8, x: f64, c: &[f64]) -> Result<f64, ModelError> {
        let lp = self.linear_predictor(x, c)?;
        match m {
            1 => Ok(expit(lp)),
            0 => Ok(expit(-lp)),
            other => Err(ModelError::InvalidMediator(other)),
        }
    }
}

/// `logit P(Y <= j | x, m, c) = alpha_j - (beta_x x + beta_m m + beta_xm x m + beta_c . c)`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeModel {
    alpha: Vec<f64>,
    beta_x: f64,
    beta_m: f64,
    beta_xm: f64,
    beta_c: Vec<f64>,
}

impl OutcomeModel {
    /// Rejects non-finite values and thresholds that are not strictly
    /// increasing; probabilities are never clamped downstream.
    pub fn new(
        alpha: Vec<f64>,
        beta_x: f64,
        beta_m: f64,
        beta_xm: f64,
        beta_c: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if alpha.is_empty() {
            return Err(ModelError::TooFewLevels);
        }
        for &a in &alpha {
            check_finite(a, "alpha")?;
        }
        for (i, w) in alpha.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(ModelError::UnorderedThresholds {
                    index: i + 1,
                    lower: w[0],
                    upper: w[1],
                });
            }
        }
        check_finite(beta_x, "betaX")?;
        check_finite(beta_m, "betaM")?;
        check_finite(beta_xm, "betaXM")?;
        for &b in &beta_c {
            check_finite(b, "betaC")?;
        }
        Ok(Self {
            alpha,
            beta_x,
            beta_m,
            beta_xm,
            beta_c,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta_x(&self) -> f64 {
        self.beta_x
    }

    pub fn beta_m(&self) -> f64 {
        self.beta_m
    }

    pub fn beta_xm(&self) -> f64 {
        self.beta_xm
    }

    pub fn beta_c(&self) -> &[f64] {
        &self.beta_c
    }

    /// Number of outcome levels `J`.
    pub fn levels(&self) -> usize {
        self.alpha.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.beta_c.len()
    }

    /// Parameters in the order `(alpha_1..alpha_{J-1}, beta_x, beta_m, beta_xm, beta_c...)`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut v = self.alpha.clone();
        v.extend_from_slice(&[self.beta_x, self.beta_m, self.beta_xm]);
        v.extend_from_slice(&self.beta_c);
        v
    }

    pub fn from_params(params: &[f64], levels: usize) -> Result<Self, ModelError> {
        if levels < 2 {
            return Err(ModelError::TooFewLevels);
        }
        let k = levels - 1;
        if params.len() < k + 3 {
            return Err(ModelError::DimensionMismatch {
                expected: k + 3,
                found: params.len(),
            });
        }
        Self::new(
            params[..k].to_vec(),
            params[k],
            params[k + 1],
            params[k + 2],
            params[k + 3..].to_vec(),
        )
    }

    /// Mediator-independent part of the outcome predictor, `beta_x x + beta_c . c`.
    pub(crate) fn exposure_predictor(&self, x: f64, c: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.dim(), c)?;
        Ok(self.beta_x * x + dot(&self.beta_c, c))
    }

    /// Shift of the predictor when `M` moves from 0 to 1 at exposure `x`.
    pub(crate) fn mediator_shift(&self, x: f64) -> f64 {
        self.beta_m + self.beta_xm * x
    }

    /// `beta_x x + beta_m m + beta_xm x m + beta_c . c`.
    pub fn linear_predictor(&self, x: f64, m: u8, c: &[f64]) -> Result<f64, ModelError> {
        let base = self.exposure_predictor(x, c)?;
        match m {
            0 => Ok(base),
            1 => Ok(base + self.mediator_shift(x)),
            other => Err(ModelError::InvalidMediator(other)),
        }
    }

    /// Threshold `alpha_j` for `j` in `1..=J-1`.
    pub fn threshold(&self, j: usize) -> Result<f64, ModelError> {
        if j == 0 || j > self.alpha.len() {
            return Err(ModelError::LevelOutOfRange {
                level: j,
                max: self.alpha.len(),
            });
        }
        Ok(self.alpha[j - 1])
    }

    /// `P(Y <= j | x, m, c)`.
    pub fn cumulative_probability(
        &self,
        j: usize,
        x: f64,
        m: u8,
        c: &[f64],
    ) -> Result<f64, ModelError> {
        let a = self.threshold(j)?;
        Ok(expit(a - self.linear_predictor(x, m, c)?))
    }

    /// `P(Y > j | x, m, c)`, evaluated directly rather than as a complement.
    pub fn exceedance_probability(
        &self,
        j: usize,
        x: f64,
        m: u8,
        c: &[f64],
    ) -> Result<f64, ModelError> {
        let a = self.threshold(j)?;
        Ok(expit(self.linear_predictor(x, m, c)? - a))
    }

    /// `(P(Y=1), ..., P(Y=J))` given `(x, m, c)`.
    pub fn category_probabilities(&self, x: f64, m: u8, c: &[f64]) -> Result<Vec<f64>, ModelError> {
        let eta = self.linear_predictor(x, m, c)?;
        Ok(category_probabilities_at(&self.alpha, eta))
    }
}

/// Category probabilities for thresholds `alpha` and predictor `eta`.
///
/// The top category uses `expit(eta - alpha_{J-1})` so that it keeps full
/// relative precision when it is small.
pub(crate) fn category_probabilities_at(alpha: &[f64], eta: f64) -> Vec<f64> {
    let k = alpha.len();
    let mut out = Vec::with_capacity(k + 1);
    let mut prev = 0.0;
    for &a in alpha {
        let cur = expit(a - eta);
        out.push(cur - prev);
        prev = cur;
    }
    out.push(expit(eta - alpha[k - 1]));
    out
}

/// Parameter file layout shared by the CLI and by golden files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub gamma0: f64,
    #[serde(rename = "gammaX")]
    pub gamma_x: f64,
    #[serde(rename = "gammaC", default)]
    pub gamma_c: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(rename = "betaX")]
    pub beta_x: f64,
    #[serde(rename = "betaM")]
    pub beta_m: f64,
    #[serde(rename = "betaXM")]
    pub beta_xm: f64,
    #[serde(rename = "betaC", default)]
    pub beta_c: Vec<f64>,
}

impl ModelParameters {
    pub fn from_models(med: &MediatorModel, out: &OutcomeModel) -> Self {
        Self {
            gamma0: med.gamma0,
            gamma_x: med.gamma_x,
            gamma_c: med.gamma_c.clone(),
            alpha: out.alpha.clone(),
            beta_x: out.beta_x,
            beta_m: out.beta_m,
            beta_xm: out.beta_xm,
            beta_c: out.beta_c.clone(),
        }
    }

    /// Builds and cross-checks both models.
    pub fn into_models(self) -> Result<(MediatorModel, OutcomeModel), ModelError> {
        let med = MediatorModel::new(self.gamma0, self.gamma_x, self.gamma_c)?;
        let out = OutcomeModel::new(
            self.alpha,
            self.beta_x,
            self.beta_m,
            self.beta_xm,
            self.beta_c,
        )?;
        if med.dim() != out.dim() {
            return Err(ModelError::IncompatibleModels {
                mediator: med.dim(),
                outcome: out.dim(),
            });
        }
        Ok((med, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three_level_outcome() -> OutcomeModel {
        OutcomeModel::new(vec![2.5, 5.5], 1.1, 0.7, 0.5, vec![]).unwrap()
    }

    #[test]
    fn mediator_probability_examples() {
        let flat = MediatorModel::new(0.0, 0.0, vec![]).unwrap();
        assert_eq!(flat.probability(7.0, &[]).unwrap(), 0.5);
        let med = MediatorModel::new(-1.0, 0.5, vec![]).unwrap();
        assert_eq!(med.probability(2.0, &[]).unwrap(), 0.5);
        // expit(0.75), 40-digit reference
        assert!((med.probability(3.5, &[]).unwrap() - 0.679_178_699_175_393).abs() < 1e-12);
    }

    #[test]
    fn mediator_dimension_mismatch() {
        let med = MediatorModel::new(0.0, 1.0, vec![0.3]).unwrap();
        assert_eq!(
            med.probability(0.0, &[]),
            Err(ModelError::DimensionMismatch {
                expected: 1,
                found: 0
            })
        );
    }

    #[test]
    fn cumulative_probability_examples() {
        let out = three_level_outcome();
        // expit(0.3)
        let p = out.cumulative_probability(1, 2.0, 0, &[]).unwrap();
        assert!((p - 0.574_442_516_811_659).abs() < 1e-12);
        assert!(out.cumulative_probability(2, 1e6, 0, &[]).unwrap() < 1e-300);
        let flat = OutcomeModel::new(vec![0.0, 1.0], 0.0, 0.0, 0.0, vec![]).unwrap();
        assert_eq!(flat.cumulative_probability(1, 5.0, 1, &[]).unwrap(), 0.5);
    }

    #[test]
    fn cumulative_probability_errors() {
        let out = three_level_outcome();
        assert_eq!(
            out.cumulative_probability(3, 0.0, 0, &[]),
            Err(ModelError::LevelOutOfRange { level: 3, max: 2 })
        );
        assert_eq!(
            out.cumulative_probability(0, 0.0, 0, &[]),
            Err(ModelError::LevelOutOfRange { level: 0, max: 2 })
        );
        assert!(matches!(
            out.cumulative_probability(1, 0.0, 0, &[1.0]),
            Err(ModelError::DimensionMismatch { .. })
        ));
        assert_eq!(
            out.cumulative_probability(1, 0.0, 2, &[]),
            Err(ModelError::InvalidMediator(2))
        );
    }

    #[test]
    fn category_probability_examples() {
        let sym = OutcomeModel::new(vec![0.0], 0.0, 0.0, 0.0, vec![]).unwrap();
        assert_eq!(
            sym.category_probabilities(3.0, 1, &[]).unwrap(),
            vec![0.5, 0.5]
        );

        // expit(0.3), expit(3.3) - expit(0.3), 1 - expit(3.3)
        let probs = three_level_outcome()
            .category_probabilities(2.0, 0, &[])
            .unwrap();
        let expected = [
            0.574_442_516_811_659,
            0.389_986_293_915_705,
            0.035_571_189_272_636,
        ];
        for (p, e) in probs.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{p} vs {e}");
        }
    }

    #[test]
    fn construction_rejects_bad_thresholds() {
        assert!(matches!(
            OutcomeModel::new(vec![1.0, 1.0], 0.0, 0.0, 0.0, vec![]),
            Err(ModelError::UnorderedThresholds { index: 1, .. })
        ));
        assert!(matches!(
            OutcomeModel::new(vec![0.0, 2.0, 1.0], 0.0, 0.0, 0.0, vec![]),
            Err(ModelError::UnorderedThresholds { index: 2, .. })
        ));
        assert_eq!(
            OutcomeModel::new(vec![], 0.0, 0.0, 0.0, vec![]),
            Err(ModelError::TooFewLevels)
        );
        assert_eq!(
            OutcomeModel::new(vec![0.0], f64::NAN, 0.0, 0.0, vec![]),
            Err(ModelError::NonFinite("betaX"))
        );
        assert_eq!(
            MediatorModel::new(f64::INFINITY, 0.0, vec![]),
            Err(ModelError::NonFinite("gamma0"))
        );
    }

    #[test]
    fn params_round_trip() {
        let out = OutcomeModel::new(vec![-1.0, 0.5, 2.0], 0.3, -0.2, 0.1, vec![0.7, -0.4]).unwrap();
        assert_eq!(OutcomeModel::from_params(&out.to_params(), 4).unwrap(), out);
        let med = MediatorModel::new(-0.5, 0.2, vec![1.0]).unwrap();
        assert_eq!(MediatorModel::from_params(&med.to_params()).unwrap(), med);
    }

    #[test]
    fn parameter_file_mismatched_dimensions() {
        let p = ModelParameters {
            gamma0: 0.0,
            gamma_x: 0.0,
            gamma_c: vec![1.0],
            alpha: vec![0.0],
            beta_x: 0.0,
            beta_m: 0.0,
            beta_xm: 0.0,
            beta_c: vec![],
        };
        assert_eq!(
            p.into_models(),
            Err(ModelError::IncompatibleModels {
                mediator: 1,
                outcome: 0
            })
        );
    }

    fn arb_outcome() -> impl Strategy<Value = (OutcomeModel, f64, u8, Vec<f64>)> {
        (1usize..6, 0usize..3).prop_flat_map(|(k, p)| {
            (
                -4.0f64..4.0,
                prop::collection::vec(0.05f64..3.0, k - 1),
                -2.0f64..2.0,
                -2.0f64..2.0,
                -1.0f64..1.0,
                prop::collection::vec(-1.0f64..1.0, p),
                -4.0f64..4.0,
                0u8..2,
                prop::collection::vec(-2.0f64..2.0, p),
            )
                .prop_map(|(a1, gaps, bx, bm, bxm, bc, x, m, c)| {
                    let mut alpha = vec![a1];
                    for g in gaps {
                        let last = *alpha.last().unwrap();
                        alpha.push(last + g);
                    }
                    (OutcomeModel::new(alpha, bx, bm, bxm, bc).unwrap(), x, m, c)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn category_probabilities_form_a_distribution((out, x, m, c) in arb_outcome()) {
            let probs = out.category_probabilities(x, m, &c).unwrap();
            prop_assert_eq!(probs.len(), out.levels());
            for &p in &probs {
                prop_assert!((0.0..=1.0).contains(&p));
            }
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn cumulative_strictly_increasing_in_level((out, x, m, c) in arb_outcome()) {
            let cum: Vec<f64> = (1..out.levels())
                .map(|j| out.cumulative_probability(j, x, m, &c).unwrap())
                .collect();
            for w in cum.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn mediator_sign_flip(g0 in -5.0f64..5.0, gx in -2.0f64..2.0, x in -5.0f64..5.0) {
            let pos = MediatorModel::new(g0, gx, vec![]).unwrap();
            let neg = MediatorModel::new(-g0, -gx, vec![]).unwrap();
            let a = pos.probability(x, &[]).unwrap();
            let b = neg.probability(x, &[]).unwrap();
            prop_assert!((a - (1.0 - b)).abs() < 1e-15);
        }
    }
}
