//! Quantile binning of continuous scores into ordinal levels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sem::FactorScoreMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum DiscretizeError {
    #[error("need at least {k} non-missing values, got {n}")]
    InsufficientData { n: usize, k: usize },
    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("no thresholds for column `{0}`")]
    MissingThresholds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdScope {
    /// Thresholds from every scored case.
    #[default]
    Full,
    /// Thresholds from the training split only.
    Train,
}

/// Cut points for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableThresholds {
    /// Strictly increasing after deduplication.
    pub thresholds: Vec<f64>,
    /// True when tied quantiles were merged, leaving fewer than `k` levels.
    pub collapsed: bool,
}

impl VariableThresholds {
    pub fn levels(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Level in `1..=levels()`: 1 + the number of cut points strictly below
    /// `value`, so a value equal to a cut point stays in the lower bin.
    pub fn level_of(&self, value: f64) -> usize {
        1 + self.thresholds.partition_point(|&t| t < value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    pub k: usize,
    pub scope: ThresholdScope,
    /// Interpolation convention, recorded for replay.
    pub quantile_method: String,
    pub variables: BTreeMap<String, VariableThresholds>,
}

pub const QUANTILE_METHOD: &str = "linear interpolation between order statistics, h = (n-1)p + 1";

/// Sample quantile at probability `p` of sorted data using linear
/// interpolation between order statistics with `h = (n - 1) p + 1`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Raw quantiles at `j/k` for `j = 1..k-1`, before deduplication.
pub fn quantile_thresholds(scores: &[f64], k: usize) -> Result<Vec<f64>, DiscretizeError> {
    if k < 2 {
        return Err(DiscretizeError::TooFewBins(k));
    }
    let mut sorted: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.len() < k {
        return Err(DiscretizeError::InsufficientData { n: sorted.len(), k });
    }
    sorted.sort_by(f64::total_cmp);
    Ok((1..k).map(|j| quantile_sorted(&sorted, j as f64 / k as f64)).collect())
}

/// Quantile cut points with duplicates merged.
pub fn fit_thresholds(scores: &[f64], k: usize) -> Result<VariableThresholds, DiscretizeError> {
    let raw = quantile_thresholds(scores, k)?;
    let mut thresholds = raw.clone();
    thresholds.dedup();
    Ok(VariableThresholds {
        collapsed: thresholds.len() < raw.len(),
        thresholds,
    })
}

/// Fits thresholds for every column of `scores` using only the rows whose
/// index passes `use_row`.
pub fn fit_spec(
    scores: &FactorScoreMatrix,
    k: usize,
    scope: ThresholdScope,
    use_row: impl Fn(usize) -> bool,
) -> Result<DiscretizationSpec, DiscretizeError> {
    let mut variables = BTreeMap::new();
    for (j, name) in scores.latents.iter().enumerate() {
        let column: Vec<f64> = scores
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| use_row(*i))
            .filter_map(|(_, r)| r[j])
            .collect();
        variables.insert(name.clone(), fit_thresholds(&column, k)?);
    }
    Ok(DiscretizationSpec {
        k,
        scope,
        quantile_method: QUANTILE_METHOD.to_string(),
        variables,
    })
}

/// Ordinal data over named columns; levels are 1-based, `None` is missing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDataset {
    pub case_ids: Vec<String>,
    pub columns: Vec<String>,
    pub level_counts: Vec<usize>,
    pub rows: Vec<Vec<Option<usize>>>,
}

impl DiscreteDataset {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn n_cases(&self) -> usize {
        self.rows.len()
    }

    /// Rows whose index passes `keep`.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> DiscreteDataset {
        let idx: Vec<usize> = (0..self.rows.len()).filter(|&i| keep(i)).collect();
        DiscreteDataset {
            case_ids: idx.iter().map(|&i| self.case_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            level_counts: self.level_counts.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

pub fn discretize_scores(
    scores: &FactorScoreMatrix,
    spec: &DiscretizationSpec,
) -> Result<DiscreteDataset, DiscretizeError> {
    let mut cuts = Vec::with_capacity(scores.latents.len());
    for name in &scores.latents {
        cuts.push(
            spec.variables
                .get(name)
                .ok_or_else(|| DiscretizeError::MissingThresholds(name.clone()))?,
        );
    }
    let rows = scores
        .values
        .iter()
        .map(|r| {
            r.iter()
                .zip(&cuts)
                .map(|(v, t)| v.map(|v| t.level_of(v)))
                .collect()
        })
        .collect();
    Ok(DiscreteDataset {
        case_ids: scores.case_ids.clone(),
        columns: scores.latents.clone(),
        level_counts: cuts.iter().map(|t| t.levels()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_to_ten() -> Vec<f64> {
        (1..=10).map(f64::from).collect()
    }

    #[test]
    fn quintile_thresholds_of_one_to_ten() {
        // h = 9p + 1: 2.8, 4.6, 6.4, 8.2 -> x_h interpolated on 1..10 equals h
        let t = quantile_thresholds(&one_to_ten(), 5).unwrap();
        let expected = [2.8, 4.6, 6.4, 8.2];
        for (a, b) in t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{t:?}");
        }
    }

    #[test]
    fn median_split() {
        assert_eq!(quantile_thresholds(&one_to_ten(), 2).unwrap(), vec![5.5]);
    }

    #[test]
    fn identical_scores_collapse() {
        let t = fit_thresholds(&[3.0; 12], 5).unwrap();
        assert!(t.collapsed);
        assert_eq!(t.thresholds, vec![3.0]);
        assert_eq!(t.levels(), 2);
        assert_eq!(quantile_thresholds(&[3.0; 12], 5).unwrap(), vec![3.0; 4]);
    }

    #[test]
    fn insufficient_data() {
        assert_eq!(
            quantile_thresholds(&[1.0, 2.0], 5),
            Err(DiscretizeError::InsufficientData { n: 2, k: 5 })
        );
    }

    #[test]
    fn closed_left_levels() {
        let t = fit_thresholds(&one_to_ten(), 5).unwrap();
        let levels: Vec<usize> = one_to_ten().into_iter().map(|v| t.level_of(v)).collect();
        assert_eq!(levels, vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
        // boundary value belongs to the lower bin
        assert_eq!(t.level_of(2.8), 1);
        assert_eq!(t.level_of(2.8000001), 2);
        assert_eq!(t.level_of(1e9), 5);
        assert_eq!(t.level_of(-1e9), 1);
    }

    #[test]
    fn missing_scores_propagate() {
        let scores = FactorScoreMatrix {
            case_ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            latents: vec!["F".into()],
            values: vec![vec![Some(1.0)], vec![None], vec![Some(3.0)], vec![Some(2.0)]],
        };
        let spec = fit_spec(&scores, 2, ThresholdScope::Full, |_| true).unwrap();
        assert_eq!(spec.variables["F"].thresholds, vec![2.0]);
        let d = discretize_scores(&scores, &spec).unwrap();
        assert_eq!(d.rows, vec![vec![Some(1)], vec![None], vec![Some(2)], vec![Some(1)]]);
        assert_eq!(discretize_scores(&scores, &spec).unwrap(), d);
    }
}
