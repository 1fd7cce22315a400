use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalysisError;
use crate::bn::{posterior, BayesNet, BnError, Evidence};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourGrid {
    pub target: String,
    pub axes: (String, String),
    /// `values[k][i][j] = P(target = k | a = i, b = j)` (0-based indices);
    /// `None` where the conditioning pair has probability zero.
    pub values: Vec<Vec<Vec<Option<f64>>>>,
}

pub fn contour_grid(net: &BayesNet, target: usize, a: usize, b: usize) -> Result<ContourGrid, AnalysisError> {
    if target == a || target == b || a == b {
        return Err(AnalysisError::SameNode);
    }
    let dag = net.dag();
    let (rk, ra, rb) = (dag.levels(target), dag.levels(a), dag.levels(b));
    let mut values = vec![vec![vec![None; rb]; ra]; rk];
    for i in 0..ra {
        for j in 0..rb {
            let evidence: Evidence = [(a, i), (b, j)].into();
            match posterior(net, target, &evidence) {
                Ok(p) => {
                    for (k, &v) in p.probs.iter().enumerate() {
                        values[k][i][j] = Some(v);
                    }
                }
                Err(BnError::ZeroProbabilityEvidence) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(ContourGrid {
        target: dag.name(target).to_string(),
        axes: (dag.name(a).to_string(), dag.name(b).to_string()),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalProfile {
    pub given: String,
    /// 0-based state of `given`.
    pub state: usize,
    pub children: BTreeMap<String, Vec<f64>>,
}

/// Posterior of every child of `given` under the single observation
/// `given = state`.
pub fn conditional_profile(net: &BayesNet, given: usize, state: usize) -> Result<ConditionalProfile, AnalysisError> {
    let dag = net.dag();
    let evidence: Evidence = [(given, state)].into();
    let mut children = BTreeMap::new();
    for &c in dag.children(given) {
        children.insert(dag.name(c).to_string(), posterior(net, c, &evidence)?.probs);
    }
    Ok(ConditionalProfile {
        given: dag.name(given).to_string(),
        state,
        children,
    })
}
