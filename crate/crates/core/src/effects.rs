//! Closed-form counterfactual effects on the log-odds scale.
//!
//! All quantities are conditional on one covariate vector `c`. The effects
//! contrast an active exposure `x` against a baseline `x*`; the alternative
//! decomposition that swaps the exposure of the mediator's natural value is
//! obtained by calling these functions with `x` and `x*` exchanged.
//!
//! The central building block is the log-odds of `M = 1` given the event
//! `D_j = I(Y <= j)`:
//!
//! ```text
//! g_d^j(x, x*; c) = -d (beta_m + beta_xm x)
//!                 + log[(1 + exp(alpha_j - beta_x x - beta_c.c))
//!                       / (1 + exp(alpha_j - beta_x x - beta_m - beta_xm x - beta_c.c))]
//!                 + gamma0 + gamma_x x* + gamma_c.c
//! ```
//!
//! whose one-argument form is `g_d^j(x; c) = g_d^j(x, x; c)`.

use serde::Serialize;

use crate::error::{EffectError, ModelError};
use crate::math::{dot, log1pexp_ratio};
use crate::model::{MediatorModel, OutcomeModel};

/// Largest tolerated `|log TCE - (log NDE + log NIE)|`, relative to the
/// magnitude of the terms once they exceed 1.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-10;

/// Contrast of exposure `x` against baseline `xstar`, conditional on `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectQuery {
    pub x: f64,
    pub xstar: f64,
    pub c: Vec<f64>,
}

impl EffectQuery {
    pub fn new(x: f64, xstar: f64, c: Vec<f64>) -> Result<Self, ModelError> {
        if !x.is_finite() {
            return Err(ModelError::NonFiniteInput("x"));
        }
        if !xstar.is_finite() {
            return Err(ModelError::NonFiniteInput("xstar"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteInput("c"));
        }
        Ok(Self { x, xstar, c })
    }

    /// The same contrast with `x` and `x*` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.xstar,
            xstar: self.x,
            c: self.c.clone(),
        }
    }
}

/// Per-level log effects. Vectors are indexed by `j - 1`; `log_cde` by `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectTable {
    pub log_tce: Vec<f64>,
    pub log_nde: Vec<f64>,
    pub log_nie: Vec<f64>,
    /// `[log CDE(m=0), log CDE(m=1)]`; the same for every level.
    pub log_cde: [f64; 2],
    pub query: EffectQuery,
}

/// Which effect an entry of an [`EffectTable`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EffectKind {
    #[serde(rename = "NDE")]
    Nde,
    #[serde(rename = "NIE")]
    Nie,
    #[serde(rename = "TCE")]
    Tce,
    #[serde(rename = "CDE")]
    Cde,
}

impl EffectKind {
    pub fn label(self) -> &'static str {
        match self {
            EffectKind::Nde => "NDE",
            EffectKind::Nie => "NIE",
            EffectKind::Tce => "TCE",
            EffectKind::Cde => "CDE",
        }
    }
}

/// Address of one entry: `index` is the level `j` for NDE/NIE/TCE and the
/// mediator value `m` for CDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EffectKey {
    pub kind: EffectKind,
    pub index: usize,
}

impl std::fmt::Display for EffectKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            EffectKind::Cde => write!(f, "log CDE(m={})", self.index),
            k => write!(f, "log {}^{}", k.label(), self.index),
        }
    }
}

impl EffectTable {
    /// Number of thresholds, `J - 1`.
    pub fn thresholds(&self) -> usize {
        self.log_tce.len()
    }

    /// Entry keys in reporting order: NDE, NIE and TCE by level, then
    /// CDE for `m = 1` and `m = 0`.
    pub fn keys(&self) -> Vec<EffectKey> {
        keys_for(self.thresholds())
    }

    pub fn get(&self, key: EffectKey) -> f64 {
        match key.kind {
            EffectKind::Nde => self.log_nde[key.index - 1],
            EffectKind::Nie => self.log_nie[key.index - 1],
            EffectKind::Tce => self.log_tce[key.index - 1],
            EffectKind::Cde => self.log_cde[key.index],
        }
    }

    /// All entries flattened in [`EffectTable::keys`] order.
    pub fn values(&self) -> Vec<f64> {
        self.keys().into_iter().map(|k| self.get(k)).collect()
    }
}

/// Entry keys for a table with `thresholds` levels.
pub fn keys_for(thresholds: usize) -> Vec<EffectKey> {
    let mut keys = Vec::with_capacity(3 * thresholds + 2);
    for kind in [EffectKind::Nde, EffectKind::Nie, EffectKind::Tce] {
        for j in 1..=thresholds {
            keys.push(EffectKey { kind, index: j });
        }
    }
    keys.push(EffectKey {
        kind: EffectKind::Cde,
        index: 1,
    });
    keys.push(EffectKey {
        kind: EffectKind::Cde,
        index: 0,
    });
    keys
}

fn check_models(med: &MediatorModel, out: &OutcomeModel) -> Result<(), ModelError> {
    if med.dim() != out.dim() {
        return Err(ModelError::IncompatibleModels {
            mediator: med.dim(),
            outcome: out.dim(),
        });
    }
    Ok(())
}

fn check_indicator(d: u8) -> Result<(), ModelError> {
    if d > 1 {
        Err(ModelError::InvalidIndicator(d))
    } else {
        Ok(())
    }
}

/// `g_d^j(x, x*; c)`: outcome part evaluated at `x`, mediator part at `x*`.
pub fn g_cross(
    d: u8,
    j: usize,
    x: f64,
    xstar: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    check_indicator(d)?;
    check_models(med, out)?;
    let alpha = out.threshold(j)?;
    let base = alpha - out.exposure_predictor(x, c)?;
    let shift = out.mediator_shift(x);
    let outcome_part = log1pexp_ratio(base, base - shift);
    let mediator_part = med.gamma0() + med.gamma_x() * xstar + dot(med.gamma_c(), c);
    Ok(-f64::from(d) * shift + outcome_part + mediator_part)
}

/// `g_d^j(x; c)`, the log-odds of `M = 1` given `D_j = d`, `X = x`, `C = c`.
pub fn g_observed(
    d: u8,
    j: usize,
    x: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    g_cross(d, j, x, x, c, med, out)
}

/// `log[(1 + exp g_1^j(x, x*; c)) / (1 + exp g_0^j(x, x*; c))]`
fn natural_ratio(
    j: usize,
    x: f64,
    xstar: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    let g1 = g_cross(1, j, x, xstar, c, med, out)?;
    let g0 = g_cross(0, j, x, xstar, c, med, out)?;
    Ok(log1pexp_ratio(g1, g0))
}

/// Log relative risk of `M = 0` between `D_j = 1` and `D_j = 0`:
/// `log[(1 + exp g_0^j(x; c)) / (1 + exp g_1^j(x; c))]`.
pub fn log_rr_correction(
    j: usize,
    x: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    Ok(-natural_ratio(j, x, x, c, med, out)?)
}

/// `logit P(Y <= j | x, c)` with the mediator marginalised out.
pub fn marginal_cumulative_logit(
    j: usize,
    x: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    counterfactual_cumulative_logit(j, x, x, c, med, out)
}

/// `logit P(Y(x, M(x*)) <= j | c)`, the natural effect model.
pub fn counterfactual_cumulative_logit(
    j: usize,
    x: f64,
    xstar: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    let ratio = natural_ratio(j, x, xstar, c, med, out)?;
    Ok(out.threshold(j)? - out.exposure_predictor(x, c)? + ratio)
}

/// `logit P(Y(x, M(x*)) <= j | c)` by direct summation over the mediator:
///
/// ```text
/// log sum_m P(Y <= j | x, m, c) P(M = m | x*, c) - log sum_m P(Y > j | x, m, c) P(M = m | x*, c)
/// ```
///
/// Uses only the model probability calls, so it is independent of the
/// g-function algebra.
pub fn plug_in_oracle(
    j: usize,
    x: f64,
    xstar: f64,
    c: &[f64],
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    check_models(med, out)?;
    let mut below = 0.0;
    let mut above = 0.0;
    for m in [0u8, 1] {
        let pm = med.probability_of(m, xstar, c)?;
        below += out.cumulative_probability(j, x, m, c)? * pm;
        above += out.exceedance_probability(j, x, m, c)? * pm;
    }
    Ok(below.ln() - above.ln())
}

pub fn log_tce(
    j: usize,
    query: &EffectQuery,
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    let (x, xs, c) = (query.x, query.xstar, &query.c);
    let active = natural_ratio(j, x, x, c, med, out)?;
    let baseline = natural_ratio(j, xs, xs, c, med, out)?;
    Ok(out.beta_x() * (x - xs) - active + baseline)
}

/// `(beta_x + beta_xm m)(x - x*)`; constant across outcome levels.
pub fn log_cde(m: u8, query: &EffectQuery, out: &OutcomeModel) -> Result<f64, ModelError> {
    if m > 1 {
        return Err(ModelError::InvalidMediator(m));
    }
    Ok((out.beta_x() + out.beta_xm() * f64::from(m)) * (query.x - query.xstar))
}

pub fn log_nde(
    j: usize,
    query: &EffectQuery,
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    let (x, xs, c) = (query.x, query.xstar, &query.c);
    let crossed = natural_ratio(j, x, xs, c, med, out)?;
    let baseline = natural_ratio(j, xs, xs, c, med, out)?;
    Ok(out.beta_x() * (x - xs) - crossed + baseline)
}

pub fn log_nie(
    j: usize,
    query: &EffectQuery,
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<f64, ModelError> {
    let (x, xs, c) = (query.x, query.xstar, &query.c);
    let active = natural_ratio(j, x, x, c, med, out)?;
    let crossed = natural_ratio(j, x, xs, c, med, out)?;
    Ok(-active + crossed)
}

/// All per-level effects plus both controlled direct effects.
///
/// Fails with [`EffectError::Decomposition`] if the independently computed
/// total effect does not equal the sum of the natural effects.
pub fn effect_table(
    query: &EffectQuery,
    med: &MediatorModel,
    out: &OutcomeModel,
) -> Result<EffectTable, EffectError> {
    check_models(med, out)?;
    let k = out.levels() - 1;
    let mut table = EffectTable {
        log_tce: Vec::with_capacity(k),
        log_nde: Vec::with_capacity(k),
        log_nie: Vec::with_capacity(k),
        log_cde: [log_cde(0, query, out)?, log_cde(1, query, out)?],
        query: query.clone(),
    };
    for j in 1..=k {
        let tce = log_tce(j, query, med, out)?;
        let nde = log_nde(j, query, med, out)?;
        let nie = log_nie(j, query, med, out)?;
        let sum = nde + nie;
        let scale = 1.0f64.max(nde.abs()).max(nie.abs());
        if (tce - sum).abs() > DECOMPOSITION_TOLERANCE * scale {
            return Err(EffectError::Decomposition { level: j, tce, sum });
        }
        table.log_tce.push(tce);
        table.log_nde.push(nde);
        table.log_nie.push(nie);
    }
    Ok(table)
}
