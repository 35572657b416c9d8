//! Observation records and dataset validation.

use crate::error::{DatasetError, Violation};

/// A row as read from an external source, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub x: f64,
    pub m: f64,
    pub y: f64,
    pub c: Vec<f64>,
}

/// A validated observation `(x, m, y, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub x: f64,
    /// Mediator in {0, 1}.
    pub m: u8,
    /// Outcome level in `1..=J`.
    pub y: usize,
    pub c: Vec<f64>,
}

/// A nonempty collection of valid records sharing `J` and `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ObservationRecord>,
    levels: usize,
    dim: usize,
}

impl Dataset {
    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    /// Declared number of outcome levels `J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Covariate dimension `p`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Counts of each outcome level, index 0 holding level 1.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.levels];
        for r in &self.records {
            counts[r.y - 1] += 1;
        }
        counts
    }

    /// Declared levels that never occur.
    pub fn missing_levels(&self) -> Vec<usize> {
        self.level_counts()
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Counts of `m = 0` and `m = 1`.
    pub fn mediator_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for r in &self.records {
            counts[r.m as usize] += 1;
        }
        counts
    }

    /// New dataset made of the rows at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            levels: self.levels,
            dim: self.dim,
        }
    }

    /// Builds a dataset from records already known to be valid.
    pub(crate) fn from_valid(records: Vec<ObservationRecord>, levels: usize, dim: usize) -> Self {
        debug_assert!(!records.is_empty());
        Dataset {
            records,
            levels,
            dim,
        }
    }
}

/// Checks every raw row against `J` levels and `p` covariates.
///
/// All violations are collected, not just the first.
pub fn validate_dataset(
    raw: &[RawRecord],
    levels: usize,
    dim: usize,
) -> Result<Dataset, DatasetError> {
    if levels < 2 {
        return Err(DatasetError::TooFewLevels(levels));
    }
    if raw.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut violations = Vec::new();
    let mut records = Vec::with_capacity(raw.len());
    let mut flag = |row: usize, field: &str, reason: String| {
        violations.push(Violation {
            row,
            field: field.to_string(),
            reason,
        })
    };
    for (row, r) in raw.iter().enumerate() {
        let mut ok = true;
        if !r.x.is_finite() {
            flag(row, "x", format!("non-finite value {}", r.x));
            ok = false;
        }
        if r.m != 0.0 && r.m != 1.0 {
            flag(row, "m", format!("mediator must be 0 or 1, got {}", r.m));
            ok = false;
        }
        let y_valid = r.y.is_finite() && r.y.fract() == 0.0 && r.y >= 1.0 && r.y <= levels as f64;
        if !y_valid {
            flag(
                row,
                "y",
                format!("outcome must be an integer in 1..={levels}, got {}", r.y),
            );
            ok = false;
        }
        if r.c.len() != dim {
            flag(
                row,
                "c",
                format!("expected {dim} covariates, got {}", r.c.len()),
            );
            ok = false;
        } else {
            for (k, v) in r.c.iter().enumerate() {
                if !v.is_finite() {
                    flag(row, &format!("c{}", k + 1), format!("non-finite value {v}"));
                    ok = false;
                }
            }
        }
        if ok {
            records.push(ObservationRecord {
                x: r.x,
                m: r.m as u8,
                y: r.y as usize,
                c: r.c.clone(),
            });
        }
    }
    if violations.is_empty() {
        Ok(Dataset::from_valid(records, levels, dim))
    } else {
        Err(DatasetError::Invalid(violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(x: f64, m: f64, y: f64) -> RawRecord {
        RawRecord { x, m, y, c: vec![] }
    }

    #[test]
    fn valid_rows() {
        let rows = [raw(0.1, 0.0, 1.0), raw(0.2, 1.0, 2.0), raw(-1.0, 1.0, 3.0)];
        let data = validate_dataset(&rows, 3, 0).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.level_counts(), vec![1, 1, 1]);
        assert_eq!(data.mediator_counts(), [1, 2]);
    }

    #[test]
    fn mediator_out_of_range_names_row_and_field() {
        let rows = [raw(0.1, 0.0, 1.0), raw(0.2, 2.0, 2.0)];
        match validate_dataset(&rows, 3, 0) {
            Err(DatasetError::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].row, 1);
                assert_eq!(v[0].field, "m");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn outcome_out_of_range_names_row_and_field() {
        let rows = [raw(0.1, 0.0, 6.0)];
        match validate_dataset(&rows, 5, 0) {
            Err(DatasetError::Invalid(v)) => {
                assert_eq!((v[0].row, v[0].field.as_str()), (0, "y"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let rows = [
            raw(f64::NAN, 0.0, 1.0),
            RawRecord {
                x: 0.0,
                m: 1.0,
                y: 1.5,
                c: vec![1.0],
            },
            raw(0.0, 0.5, 0.0),
        ];
        match validate_dataset(&rows, 3, 0) {
            Err(DatasetError::Invalid(v)) => {
                let got: Vec<(usize, &str)> = v.iter().map(|e| (e.row, e.field.as_str())).collect();
                assert_eq!(got, vec![(0, "x"), (1, "y"), (1, "c"), (2, "m"), (2, "y")]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_non_finite_covariates() {
        let rows = [
            RawRecord {
                x: 0.0,
                m: 0.0,
                y: 1.0,
                c: vec![1.0, 2.0],
            },
            RawRecord {
                x: 0.0,
                m: 0.0,
                y: 1.0,
                c: vec![1.0, f64::INFINITY],
            },
        ];
        match validate_dataset(&rows, 2, 2) {
            Err(DatasetError::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].field, "c2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(validate_dataset(&[], 3, 0), Err(DatasetError::Empty));
    }

    #[test]
    fn missing_levels_reported() {
        let rows = [raw(0.0, 0.0, 1.0), raw(0.0, 1.0, 2.0), raw(0.0, 1.0, 4.0)];
        let data = validate_dataset(&rows, 5, 0).unwrap();
        assert_eq!(data.missing_levels(), vec![3, 5]);
    }
}
