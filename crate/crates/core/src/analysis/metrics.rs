use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalysisError;
use crate::bn::{posterior, BayesNet, BnError, Evidence};
use crate::discretize::DiscreteDataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    /// 1-based predicted level per case; `None` when skipped.
    pub predicted: Vec<Option<usize>>,
    /// Cases whose evidence had probability zero under the net.
    pub skipped: usize,
}

/// Posterior-argmax prediction of `target` for every case, using whichever
/// of `evidence_nodes` are observed in that case. Ties go to the lowest level.
pub fn predict(
    net: &BayesNet,
    target: usize,
    cases: &DiscreteDataset,
    evidence_nodes: &[usize],
) -> Result<Prediction, AnalysisError> {
    let dag = net.dag();
    let mut cols = Vec::with_capacity(evidence_nodes.len());
    for &v in evidence_nodes {
        if v == target {
            return Err(BnError::QueryInEvidence(dag.name(v).to_string()).into());
        }
        let c = cases
            .column_index(dag.name(v))
            .ok_or_else(|| BnError::MissingColumn(dag.name(v).to_string()))?;
        cols.push((v, c));
    }
    let mut cache: BTreeMap<Vec<(usize, usize)>, Option<usize>> = BTreeMap::new();
    let mut skipped = 0;
    let mut predicted = Vec::with_capacity(cases.n_cases());
    for row in &cases.rows {
        let key: Vec<(usize, usize)> = cols
            .iter()
            .filter_map(|&(v, c)| row[c].map(|level| (v, level - 1)))
            .collect();
        let pred = match cache.get(&key) {
            Some(p) => *p,
            None => {
                let evidence: Evidence = key.iter().copied().collect();
                let p = match posterior(net, target, &evidence) {
                    Ok(post) => Some(post.argmax() + 1),
                    Err(BnError::ZeroProbabilityEvidence) => None,
                    Err(e) => return Err(e.into()),
                };
                cache.insert(key, p);
                p
            }
        };
        if pred.is_none() {
            skipped += 1;
        }
        predicted.push(pred);
    }
    Ok(Prediction { predicted, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    /// Single-label micro averages coincide with accuracy.
    pub recall_micro: f64,
    pub f1_micro: f64,
    /// `confusion[truth - 1][predicted - 1]`.
    pub confusion: Vec<Vec<usize>>,
    pub n_evaluated: usize,
}

/// Accuracy plus macro- and micro-averaged recall and F1 over the pairs where
/// both entries are present. Levels are 1-based, `levels` sizes the confusion
/// matrix. Macro recall averages over classes present in the truth; macro
/// F1 averages over classes present in either list, a zero denominator
/// contributing 0.
pub fn classification_metrics(
    predicted: &[Option<usize>],
    truth: &[Option<usize>],
    levels: usize,
) -> Result<MetricsReport, AnalysisError> {
    if predicted.len() != truth.len() {
        return Err(AnalysisError::LengthMismatch(predicted.len(), truth.len()));
    }
    let k = predicted
        .iter()
        .chain(truth)
        .flatten()
        .copied()
        .max()
        .unwrap_or(0)
        .max(levels);
    let mut confusion = vec![vec![0usize; k]; k];
    let mut n = 0;
    for (p, t) in predicted.iter().zip(truth) {
        if let (Some(p), Some(t)) = (p, t) {
            confusion[t - 1][p - 1] += 1;
            n += 1;
        }
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = if n > 0 { correct as f64 / n as f64 } else { 0.0 };
    let mut recalls = Vec::new();
    let mut f1s = Vec::new();
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let actual: usize = confusion[c].iter().sum();
        let predicted_c: usize = (0..k).map(|r| confusion[r][c]).sum();
        if actual > 0 {
            recalls.push(tp / actual as f64);
        }
        if actual > 0 || predicted_c > 0 {
            let denom = (actual + predicted_c) as f64;
            f1s.push(if denom > 0.0 { 2.0 * tp / denom } else { 0.0 });
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(MetricsReport {
        accuracy,
        recall_macro: mean(&recalls),
        f1_macro: mean(&f1s),
        recall_micro: accuracy,
        f1_micro: accuracy,
        confusion,
        n_evaluated: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(v: &[usize]) -> Vec<Option<usize>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn perfect_predictions() {
        let m = classification_metrics(&some(&[1, 2, 3, 3]), &some(&[1, 2, 3, 3]), 3).unwrap();
        assert_eq!((m.accuracy, m.recall_macro, m.f1_macro), (1.0, 1.0, 1.0));
    }

    #[test]
    fn binary_hand_example() {
        let m = classification_metrics(&some(&[1, 2, 2, 2]), &some(&[1, 1, 2, 2]), 2).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.recall_macro, 0.75);
        // F1: class 1 = 2/3, class 2 = 4/5
        assert!((m.f1_macro - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-15);
        assert_eq!(m.confusion, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn absent_classes_and_missing_pairs() {
        let m = classification_metrics(&[Some(1), Some(3), None], &[Some(1), Some(1), Some(2)], 3).unwrap();
        assert_eq!(m.n_evaluated, 2);
        assert_eq!(m.recall_macro, 0.5);
        // class 1: F1 = 2/3; class 3 predicted but never true: 0
        assert!((m.f1_macro - (2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(matches!(
            classification_metrics(&[Some(1)], &[], 2),
            Err(AnalysisError::LengthMismatch(1, 0))
        ));
    }
}
