//! Synthetic data from the two models and Monte Carlo replication studies.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, ObservationRecord};
use crate::effects::{effect_table, keys_for, EffectKey, EffectQuery, EffectTable};
use crate::error::{ModelError, SimulationError};
use crate::estimation::{fit_mediator, fit_outcome};
use crate::model::{MediatorModel, OutcomeModel};
use crate::rng::{normal, open_unit, stream, StreamRole, NORMAL_METHOD};

/// Independent normal covariates `c_k ~ Normal(means[k], sds[k])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovariateGenerator {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Data-generating design: `X ~ Normal(mean_x, sd_x)`, then `M` and `Y`
/// from the two models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationDesign {
    pub n: usize,
    pub mean_x: f64,
    pub sd_x: f64,
    pub mediator: MediatorModel,
    pub outcome: OutcomeModel,
    pub covariates: Option<CovariateGenerator>,
    pub seed: u64,
}

impl SimulationDesign {
    /// Three-level study: `gamma = (-1, 0.5)`, `alpha = (2.5, 5.5)`,
    /// `beta = (1.1, 0.7, 0.5)`, `X ~ Normal(3, 1.5)`, `n = 500`.
    pub fn three_level_study(seed: u64) -> Self {
        Self {
            n: 500,
            mean_x: 3.0,
            sd_x: 1.5,
            mediator: MediatorModel::new(-1.0, 0.5, vec![]).expect("valid preset"),
            outcome: OutcomeModel::new(vec![2.5, 5.5], 1.1, 0.7, 0.5, vec![])
                .expect("valid preset"),
            covariates: None,
            seed,
        }
    }

    /// Five-level study: `gamma = (-1, 0.5)`, `alpha = (0.5, 2.5, 4.5, 5.5)`,
    /// `beta = (0.5, 1.3, 0.6)`, `X ~ Normal(3, 1.5)`, `n = 500`.
    pub fn five_level_study(seed: u64) -> Self {
        Self {
            n: 500,
            mean_x: 3.0,
            sd_x: 1.5,
            mediator: MediatorModel::new(-1.0, 0.5, vec![]).expect("valid preset"),
            outcome: OutcomeModel::new(vec![0.5, 2.5, 4.5, 5.5], 0.5, 1.3, 0.6, vec![])
                .expect("valid preset"),
            covariates: None,
            seed,
        }
    }

    /// Sparse five-level example: `gamma = (-1, 0.9)`,
    /// `alpha = (-0.9, 0.9, 2.2, 3.5)`, `beta = (0.5, 1.3, 0.6)`,
    /// `X ~ Normal(3, 1.3)`, `n = 300`.
    pub fn sparse_example(seed: u64) -> Self {
        Self {
            n: 300,
            mean_x: 3.0,
            sd_x: 1.3,
            mediator: MediatorModel::new(-1.0, 0.9, vec![]).expect("valid preset"),
            outcome: OutcomeModel::new(vec![-0.9, 0.9, 2.2, 3.5], 0.5, 1.3, 0.6, vec![])
                .expect("valid preset"),
            covariates: None,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.covariates.as_ref().map_or(0, |g| g.means.len())
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.n == 0 {
            return Err(SimulationError::InvalidDesign("n must be positive".into()));
        }
        if !self.mean_x.is_finite() {
            return Err(SimulationError::InvalidDesign(
                "mean of X must be finite".into(),
            ));
        }
        if !(self.sd_x.is_finite() && self.sd_x > 0.0) {
            return Err(SimulationError::InvalidDesign(
                "standard deviation of X must be positive".into(),
            ));
        }
        if let Some(g) = &self.covariates {
            if g.means.len() != g.sds.len() {
                return Err(SimulationError::InvalidDesign(
                    "covariate means and sds differ in length".into(),
                ));
            }
            if g.means.iter().any(|m| !m.is_finite())
                || g.sds.iter().any(|s| !(s.is_finite() && *s > 0.0))
            {
                return Err(SimulationError::InvalidDesign(
                    "covariate means must be finite and sds positive".into(),
                ));
            }
        }
        let p = self.dim();
        for found in [self.mediator.dim(), self.outcome.dim()] {
            if found != p {
                return Err(ModelError::DimensionMismatch { expected: p, found }.into());
            }
        }
        Ok(())
    }
}

/// One dataset from `design`, identical to replicate 0 of a study.
pub fn simulate_dataset(design: &SimulationDesign) -> Result<Dataset, SimulationError> {
    simulate_replicate(design, 0)
}

/// Dataset for replicate `index`, drawn from streams keyed by `(seed, index)`.
///
/// Each variable has its own stream; the outcome is sampled by inverting
/// the cumulative probabilities.
pub fn simulate_replicate(
    design: &SimulationDesign,
    index: u64,
) -> Result<Dataset, SimulationError> {
    design.validate()?;
    let seed = design.seed;
    let mut x_rng = stream(seed, index, StreamRole::Exposure);
    let mut c_rng = stream(seed, index, StreamRole::Covariates);
    let mut m_rng = stream(seed, index, StreamRole::Mediator);
    let mut y_rng = stream(seed, index, StreamRole::Outcome);
    let levels = design.outcome.levels();

    let mut records = Vec::with_capacity(design.n);
    for _ in 0..design.n {
        let x = normal(&mut x_rng, design.mean_x, design.sd_x);
        let c: Vec<f64> = match &design.covariates {
            Some(g) => g
                .means
                .iter()
                .zip(&g.sds)
                .map(|(&mu, &sd)| normal(&mut c_rng, mu, sd))
                .collect(),
            None => Vec::new(),
        };
        let pm = design.mediator.probability(x, &c)?;
        let m = u8::from(open_unit(&mut m_rng) < pm);
        let u = open_unit(&mut y_rng);
        let mut y = levels;
        for j in 1..levels {
            if u < design.outcome.cumulative_probability(j, x, m, &c)? {
                y = j;
                break;
            }
        }
        records.push(ObservationRecord { x, m, y, c });
    }
    Ok(Dataset::from_valid(records, levels, design.dim()))
}

/// Estimates from one successful replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateEstimate {
    pub index: usize,
    pub mediator: MediatorModel,
    pub outcome: OutcomeModel,
    pub table: EffectTable,
}

/// Mean and standard deviation of one effect entry over replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntrySummary {
    pub key: EffectKey,
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two replicates.
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub replications: usize,
    pub entries: Vec<EntrySummary>,
    /// Successful replicates in index order.
    pub estimates: Vec<ReplicateEstimate>,
    /// `(replicate index, reason)` for every excluded replicate.
    pub failures: Vec<(usize, String)>,
    pub normal_method: &'static str,
}

impl StudySummary {
    pub fn entry(&self, key: EffectKey) -> Option<&EntrySummary> {
        self.entries.iter().find(|e| e.key == key)
    }
}

/// Mean and sample sd, accumulated in slice order.
pub(crate) fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    (mean, sd)
}

fn run_replicate(
    design: &SimulationDesign,
    index: usize,
    query: &EffectQuery,
) -> Result<ReplicateEstimate, String> {
    let data = simulate_replicate(design, index as u64).map_err(|e| e.to_string())?;
    let med = fit_mediator(&data).map_err(|e| format!("mediator fit: {e}"))?;
    let out = fit_outcome(&data).map_err(|e| format!("outcome fit: {e}"))?;
    let table = effect_table(query, &med.model, &out.model).map_err(|e| e.to_string())?;
    Ok(ReplicateEstimate {
        index,
        mediator: med.model,
        outcome: out.model,
        table,
    })
}

/// Simulates `replications` datasets, fits both models to each and
/// summarises the effect estimates at `query`.
///
/// Replicates run in parallel; results are gathered in index order before
/// any reduction, so the summary is bitwise reproducible.
pub fn monte_carlo_study(
    design: &SimulationDesign,
    replications: usize,
    query: &EffectQuery,
) -> Result<StudySummary, SimulationError> {
    if replications == 0 {
        return Err(SimulationError::NoReplications);
    }
    design.validate()?;
    if query.c.len() != design.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: design.dim(),
            found: query.c.len(),
        }
        .into());
    }
    let results: Vec<Result<ReplicateEstimate, String>> = (0..replications)
        .into_par_iter()
        .map(|r| run_replicate(design, r, query))
        .collect();

    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(est) => estimates.push(est),
            Err(reason) => failures.push((index, reason)),
        }
    }
    if estimates.is_empty() {
        return Err(SimulationError::AllReplicatesFailed(replications));
    }
    let entries = keys_for(design.outcome.levels() - 1)
        .into_iter()
        .map(|key| {
            let values: Vec<f64> = estimates.iter().map(|e| e.table.get(key)).collect();
            let (mean, sd) = mean_sd(&values);
            EntrySummary { key, mean, sd }
        })
        .collect();
    Ok(StudySummary {
        replications,
        entries,
        estimates,
        failures,
        normal_method: NORMAL_METHOD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::EffectKind;

    #[test]
    fn deterministic_given_seed() {
        let d = SimulationDesign::sparse_example(42);
        assert_eq!(simulate_dataset(&d).unwrap(), simulate_dataset(&d).unwrap());
        let other = SimulationDesign::sparse_example(43);
        assert_ne!(
            simulate_dataset(&d).unwrap(),
            simulate_dataset(&other).unwrap()
        );
    }

    #[test]
    fn sparse_design_shape() {
        let data = simulate_dataset(&SimulationDesign::sparse_example(1)).unwrap();
        assert_eq!(data.len(), 300);
        assert_eq!(data.levels(), 5);
        assert_eq!(data.dim(), 0);
    }

    #[test]
    fn mediator_mean_at_zero_predictor() {
        // gamma0 + gamma_x x = 0 at x = 2, so P(M = 1) = 1/2.
        let mut d = SimulationDesign::three_level_study(5);
        d.n = 100_000;
        d.mean_x = 2.0;
        d.sd_x = 1e-9;
        let data = simulate_dataset(&d).unwrap();
        let share = data.mediator_counts()[1] as f64 / data.len() as f64;
        assert!((share - 0.5).abs() < 0.005, "{share}");
    }

    #[test]
    fn covariates_are_generated() {
        let mut d = SimulationDesign::three_level_study(9);
        d.mediator = MediatorModel::new(-1.0, 0.5, vec![0.3]).unwrap();
        d.outcome = OutcomeModel::new(vec![2.5, 5.5], 1.1, 0.7, 0.5, vec![-0.4]).unwrap();
        d.covariates = Some(CovariateGenerator {
            means: vec![1.0],
            sds: vec![2.0],
        });
        let data = simulate_dataset(&d).unwrap();
        assert_eq!(data.dim(), 1);
        let mean = data.records().iter().map(|r| r.c[0]).sum::<f64>() / data.len() as f64;
        assert!((mean - 1.0).abs() < 0.3);
    }

    #[test]
    fn invalid_designs() {
        let mut d = SimulationDesign::three_level_study(0);
        d.sd_x = 0.0;
        assert!(matches!(
            simulate_dataset(&d),
            Err(SimulationError::InvalidDesign(_))
        ));
        let mut d = SimulationDesign::three_level_study(0);
        d.mediator = MediatorModel::new(0.0, 0.0, vec![1.0]).unwrap();
        assert!(matches!(
            simulate_dataset(&d),
            Err(SimulationError::Model(_))
        ));
        let mut d = SimulationDesign::three_level_study(0);
        d.n = 0;
        assert!(simulate_dataset(&d).is_err());
    }

    #[test]
    fn replicate_streams_keyed_by_index() {
        let d = SimulationDesign::three_level_study(77);
        let q = EffectQuery::new(3.5, 2.0, vec![]).unwrap();
        let small = monte_carlo_study(&d, 3, &q).unwrap();
        let large = monte_carlo_study(&d, 6, &q).unwrap();
        assert_eq!(small.estimates[..], large.estimates[..3]);
    }

    #[test]
    fn single_replicate_summary() {
        let d = SimulationDesign::three_level_study(3);
        let q = EffectQuery::new(3.5, 2.0, vec![]).unwrap();
        let s = monte_carlo_study(&d, 1, &q).unwrap();
        assert_eq!(s.estimates.len(), 1);
        let table = &s.estimates[0].table;
        for e in &s.entries {
            assert_eq!(e.mean, table.get(e.key));
            assert_eq!(e.sd, None);
        }
        assert!(s
            .entry(EffectKey {
                kind: EffectKind::Cde,
                index: 1
            })
            .is_some());
    }

    #[test]
    fn zero_replications_rejected() {
        let d = SimulationDesign::three_level_study(3);
        let q = EffectQuery::new(3.5, 2.0, vec![]).unwrap();
        assert_eq!(
            monte_carlo_study(&d, 0, &q),
            Err(SimulationError::NoReplications)
        );
    }

    #[test]
    fn failed_replicates_counted() {
        // With n = 8 and five levels some replicates miss a category.
        let mut d = SimulationDesign::five_level_study(2);
        d.n = 8;
        let q = EffectQuery::new(3.5, 2.0, vec![]).unwrap();
        let s = monte_carlo_study(&d, 20, &q).unwrap();
        assert!(!s.failures.is_empty());
        assert_eq!(s.failures.len() + s.estimates.len(), 20);
    }
}
