//! Exact inference by variable elimination.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::factor::Factor;
use super::net::BayesNet;
use super::BnError;

/// Observed nodes: node index -> 0-based state.
pub type Evidence = BTreeMap<usize, usize>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorDistribution {
    pub node: String,
    pub probs: Vec<f64>,
}

impl PosteriorDistribution {
    /// Most probable state; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

fn check_evidence(net: &BayesNet, evidence: &Evidence) -> Result<(), BnError> {
    let dag = net.dag();
    for (&v, &s) in evidence {
        if v >= dag.len() {
            return Err(BnError::UnknownNode(format!("#{v}")));
        }
        if s >= dag.levels(v) {
            return Err(BnError::StateOutOfRange {
                node: dag.name(v).to_string(),
                state: s,
                levels: dag.levels(v),
            });
        }
    }
    Ok(())
}

/// Greedy min-fill order over `eliminate`, given the factor scopes. Ties go
/// to the node whose name sorts first.
pub fn elimination_order(net: &BayesNet, scopes: &[Vec<usize>], eliminate: &BTreeSet<usize>) -> Vec<usize> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = eliminate.iter().map(|&v| (v, BTreeSet::new())).collect();
    for scope in scopes {
        for &a in scope {
            for &b in scope {
                if a != b {
                    adj.entry(a).or_default().insert(b);
                }
            }
        }
    }
    let mut remaining: BTreeSet<usize> = eliminate.clone();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let fill = |v: usize| -> usize {
            let nb: Vec<usize> = adj[&v].iter().copied().collect();
            let mut missing = 0;
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if !adj[&nb[i]].contains(&nb[j]) {
                        missing += 1;
                    }
                }
            }
            missing
        };
        let best = *remaining
            .iter()
            .min_by(|&&a, &&b| {
                fill(a)
                    .cmp(&fill(b))
                    .then_with(|| net.dag().name(a).cmp(net.dag().name(b)))
            })
            .expect("non-empty");
        let nb: Vec<usize> = adj[&best].iter().copied().collect();
        for &a in &nb {
            for &b in &nb {
                if a != b {
                    adj.get_mut(&a).unwrap().insert(b);
                }
            }
            adj.get_mut(&a).unwrap().remove(&best);
        }
        adj.remove(&best);
        remaining.remove(&best);
        order.push(best);
    }
    order
}

/// Joint posterior over `query` given `evidence`, with the variables of the
/// returned factor in `query` order, together with `P(evidence)`.
///
/// Nodes outside the ancestral set of the query and evidence are pruned
/// before elimination; they sum to one.
pub fn joint_posterior(net: &BayesNet, query: &[usize], evidence: &Evidence) -> Result<(Factor, f64), BnError> {
    check_evidence(net, evidence)?;
    let dag = net.dag();
    for &q in query {
        if q >= dag.len() {
            return Err(BnError::UnknownNode(format!("#{q}")));
        }
        if evidence.contains_key(&q) {
            return Err(BnError::QueryInEvidence(dag.name(q).to_string()));
        }
    }
    let relevant = dag.ancestral_set(query.iter().copied().chain(evidence.keys().copied()));
    let mut factors: Vec<Factor> = Vec::new();
    for v in (0..dag.len()).filter(|&v| relevant[v]) {
        let mut f = net.cpt_factor(v);
        for (&e, &s) in evidence {
            if f.contains(e) {
                f = f.reduce(e, s);
            }
        }
        factors.push(f);
    }
    let eliminate: BTreeSet<usize> = (0..dag.len())
        .filter(|&v| relevant[v] && !evidence.contains_key(&v) && !query.contains(&v))
        .collect();
    let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.vars().to_vec()).collect();
    for var in elimination_order(net, &scopes, &eliminate) {
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(var));
        factors = without;
        if let Some(first) = with.first() {
            let prod = with[1..].iter().fold(first.clone(), |acc, f| acc.product(f));
            factors.push(prod.marginalize(var));
        }
    }
    let joint = factors
        .iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
    let z = joint.sum();
    if !(z > 0.0) {
        return Err(BnError::ZeroProbabilityEvidence);
    }
    let joint = joint.reorder(query).normalized().expect("positive mass");
    Ok((joint, z))
}

/// Exact posterior of one node given evidence.
pub fn posterior(net: &BayesNet, query: usize, evidence: &Evidence) -> Result<PosteriorDistribution, BnError> {
    let (f, _) = joint_posterior(net, &[query], evidence)?;
    Ok(PosteriorDistribution {
        node: net.dag().name(query).to_string(),
        probs: f.values().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::{Cpt, Dag};

    fn collider() -> BayesNet {
        let dag = Dag::from_edges(&[("X", 2), ("Y", 2), ("W", 2)], &[("X", "W"), ("Y", "W")]).unwrap();
        BayesNet::new(
            dag,
            vec![
                Cpt::new(2, vec![vec![0.3, 0.7]]),
                Cpt::new(2, vec![vec![0.6, 0.4]]),
                Cpt::new(2, vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.3, 0.7], vec![0.05, 0.95]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn root_prior_without_evidence() {
        let net = collider();
        let p = posterior(&net, 0, &Evidence::new()).unwrap();
        assert!((p.probs[0] - 0.3).abs() < 1e-15 && (p.probs[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn explaining_away() {
        let net = collider();
        let w_only: Evidence = [(2, 1)].into();
        let w_and_y: Evidence = [(2, 1), (1, 1)].into();
        let a = posterior(&net, 0, &w_only).unwrap();
        let b = posterior(&net, 0, &w_and_y).unwrap();
        assert!((a.probs[0] - b.probs[0]).abs() > 1e-3);
        // X and Y are marginally independent
        let y: Evidence = [(1, 1)].into();
        let c = posterior(&net, 0, &y).unwrap();
        assert!((c.probs[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_evidence() {
        let dag = Dag::from_edges(&[("A", 2), ("B", 2)], &[("A", "B")]).unwrap();
        let net = BayesNet::new(
            dag,
            vec![Cpt::new(2, vec![vec![1.0, 0.0]]), Cpt::new(2, vec![vec![1.0, 0.0], vec![0.5, 0.5]])],
        )
        .unwrap();
        let e: Evidence = [(1, 1)].into();
        assert_eq!(posterior(&net, 0, &e), Err(BnError::ZeroProbabilityEvidence));
    }

    #[test]
    fn query_in_evidence_is_rejected() {
        let net = collider();
        let e: Evidence = [(0, 1)].into();
        assert!(matches!(posterior(&net, 0, &e), Err(BnError::QueryInEvidence(_))));
    }

    #[test]
    fn min_fill_breaks_ties_by_name() {
        let net = collider();
        let scopes = vec![vec![0], vec![1], vec![0, 1, 2]];
        let order = elimination_order(&net, &scopes, &[0, 1, 2].into());
        // every node has zero fill, so names decide: W < X < Y
        assert_eq!(order, vec![2, 0, 1]);
    }
}
