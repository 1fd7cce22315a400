use std::collections::BTreeMap;

use rand::Rng;
use serde_json::{json, Value};

use super::dag::{Dag, NodeSpec};
use super::factor::Factor;
use super::BnError;
use crate::discretize::DiscreteDataset;

/// Tolerance for row sums of user-supplied tables.
const ROW_SUM_TOL: f64 = 1e-9;

/// Conditional probability table of one node.
///
/// Row `j` holds `P(node | parents = config j)`, where configurations are
/// enumerated lexicographically with the first parent varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    levels: usize,
    rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(levels: usize, rows: Vec<Vec<f64>>) -> Self {
        Self { levels, rows }
    }

    pub fn uniform(levels: usize, configs: usize) -> Self {
        Self {
            levels,
            rows: vec![vec![1.0 / levels as f64; levels]; configs],
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.rows[config]
    }

    pub fn prob(&self, config: usize, state: usize) -> f64 {
        self.rows[config][state]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    dag: Dag,
    cpts: Vec<Cpt>,
}

impl BayesNet {
    pub fn new(dag: Dag, cpts: Vec<Cpt>) -> Result<Self, BnError> {
        if cpts.len() != dag.len() {
            return Err(BnError::BadCpt {
                node: String::new(),
                reason: format!("{} tables for {} nodes", cpts.len(), dag.len()),
            });
        }
        for (v, cpt) in cpts.iter().enumerate() {
            let node = dag.name(v).to_string();
            let bad = |reason: String| BnError::BadCpt {
                node: node.clone(),
                reason,
            };
            if cpt.levels != dag.levels(v) {
                return Err(bad(format!("{} levels, expected {}", cpt.levels, dag.levels(v))));
            }
            if cpt.rows.len() != dag.config_count(v) {
                return Err(bad(format!(
                    "{} rows, expected {}",
                    cpt.rows.len(),
                    dag.config_count(v)
                )));
            }
            for (j, row) in cpt.rows.iter().enumerate() {
                if row.len() != cpt.levels {
                    return Err(bad(format!("row {j} has {} entries", row.len())));
                }
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(bad(format!("row {j} has a negative or non-finite entry")));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOL {
                    return Err(bad(format!("row {j} sums to {s}")));
                }
            }
        }
        Ok(Self { dag, cpts })
    }

    pub fn uniform(dag: Dag) -> Self {
        let cpts = (0..dag.len())
            .map(|v| Cpt::uniform(dag.levels(v), dag.config_count(v)))
            .collect();
        Self { dag, cpts }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpt(&self, node: usize) -> &Cpt {
        &self.cpts[node]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Parent configuration index of `node` under a full assignment.
    pub fn config_index(&self, node: usize, states: &[usize]) -> usize {
        self.dag
            .parents(node)
            .iter()
            .fold(0, |acc, &p| acc * self.dag.levels(p) + states[p])
    }

    /// `P(X_1..X_n) = prod_i P(X_i | Pa(X_i))` for a full assignment of
    /// 0-based states indexed by node.
    pub fn joint_probability(&self, states: &[usize]) -> Result<f64, BnError> {
        if states.len() != self.dag.len() {
            return Err(BnError::IncompleteAssignment);
        }
        for (v, &s) in states.iter().enumerate() {
            if s >= self.dag.levels(v) {
                return Err(BnError::StateOutOfRange {
                    node: self.dag.name(v).to_string(),
                    state: s,
                    levels: self.dag.levels(v),
                });
            }
        }
        let mut p = 1.0;
        for &v in self.dag.topological_order() {
            p *= self.cpts[v].prob(self.config_index(v, states), states[v]);
        }
        Ok(p)
    }

    /// Joint probability from a name -> state map covering every node.
    pub fn joint_probability_named(&self, assignment: &BTreeMap<String, usize>) -> Result<f64, BnError> {
        let mut states = Vec::with_capacity(self.dag.len());
        for name in self.dag.names() {
            states.push(*assignment.get(name).ok_or(BnError::IncompleteAssignment)?);
        }
        self.joint_probability(&states)
    }

    /// CPT of `node` as a factor over `parents..., node`.
    pub fn cpt_factor(&self, node: usize) -> Factor {
        let mut vars: Vec<usize> = self.dag.parents(node).to_vec();
        vars.push(node);
        let cards = vars.iter().map(|&v| self.dag.levels(v)).collect();
        let values = self.cpts[node].rows.iter().flatten().copied().collect();
        Factor::new(vars, cards, values)
    }

    /// Draws `n` cases by forward sampling; levels in the result are 1-based.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> DiscreteDataset {
        let k = self.dag.len();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut states = vec![0usize; k];
            for &v in self.dag.topological_order() {
                let row = self.cpts[v].row(self.config_index(v, &states));
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut s = row.len() - 1;
                for (i, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        s = i;
                        break;
                    }
                }
                states[v] = s;
            }
            rows.push(states.into_iter().map(|s| Some(s + 1)).collect());
        }
        DiscreteDataset {
            case_ids: (1..=n).map(|i| i.to_string()).collect(),
            columns: self.dag.names().to_vec(),
            level_counts: (0..k).map(|v| self.dag.levels(v)).collect(),
            rows,
        }
    }

    /// `{"nodes": [{"name", "levels", "parents"}], "cpts": {node: [[row]]}}`.
    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .dag
            .node_specs()
            .into_iter()
            .map(|n| json!({"name": n.name, "levels": n.levels, "parents": n.parents}))
            .collect();
        let cpts: serde_json::Map<String, Value> = self
            .dag
            .names()
            .iter()
            .zip(&self.cpts)
            .map(|(name, cpt)| (name.clone(), json!(cpt.rows)))
            .collect();
        json!({"nodes": nodes, "cpts": cpts})
    }

    pub fn from_json(doc: &Value) -> Result<Self, BnError> {
        let err = |m: &str| BnError::Format(m.to_string());
        let nodes = doc
            .get("nodes")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing `nodes` array"))?;
        let mut specs = Vec::with_capacity(nodes.len());
        for n in nodes {
            let name = n.get("name").and_then(Value::as_str).ok_or_else(|| err("node without name"))?;
            let levels = n
                .get("levels")
                .and_then(Value::as_u64)
                .ok_or_else(|| err("node without integer `levels`"))? as usize;
            let parents = n
                .get("parents")
                .and_then(Value::as_array)
                .ok_or_else(|| err("node without `parents` array"))?
                .iter()
                .map(|p| p.as_str().map(str::to_string).ok_or_else(|| err("parent is not a string")))
                .collect::<Result<Vec<_>, _>>()?;
            specs.push(NodeSpec {
                name: name.to_string(),
                levels,
                parents,
            });
        }
        let dag = Dag::new(&specs)?;
        let tables = doc
            .get("cpts")
            .and_then(Value::as_object)
            .ok_or_else(|| err("missing `cpts` object"))?;
        let mut cpts = Vec::with_capacity(dag.len());
        for (v, spec) in specs.iter().enumerate() {
            let rows = tables
                .get(&spec.name)
                .and_then(Value::as_array)
                .ok_or_else(|| BnError::Format(format!("no table for `{}`", spec.name)))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| err("table row is not an array"))?
                        .iter()
                        .map(|p| p.as_f64().ok_or_else(|| err("probability is not a number")))
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            cpts.push(Cpt::new(dag.levels(v), rows));
        }
        BayesNet::new(dag, cpts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain() -> BayesNet {
        let dag = Dag::from_edges(&[("X", 2), ("W", 2), ("Y", 2)], &[("X", "W"), ("W", "Y")]).unwrap();
        BayesNet::new(
            dag,
            vec![
                Cpt::new(2, vec![vec![0.6, 0.4]]),
                Cpt::new(2, vec![vec![0.7, 0.3], vec![0.2, 0.8]]),
                Cpt::new(2, vec![vec![0.9, 0.1], vec![0.5, 0.5]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_joint_by_hand() {
        // state 0 plays the role of level 1: 0.6 * 0.7 * 0.9
        let p = chain().joint_probability(&[0, 0, 0]).unwrap();
        assert!((p - 0.378).abs() < 1e-15);
    }

    #[test]
    fn joint_sums_to_one() {
        let net = chain();
        let mut total = 0.0;
        for x in 0..2 {
            for w in 0..2 {
                for y in 0..2 {
                    total += net.joint_probability(&[x, w, y]).unwrap();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_entry_gives_zero_and_incomplete_is_error() {
        let dag = Dag::from_edges(&[("A", 2)], &[]).unwrap();
        let net = BayesNet::new(dag, vec![Cpt::new(2, vec![vec![1.0, 0.0]])]).unwrap();
        assert_eq!(net.joint_probability(&[1]).unwrap(), 0.0);
        assert_eq!(net.joint_probability(&[]), Err(BnError::IncompleteAssignment));
        let named = BTreeMap::new();
        assert_eq!(net.joint_probability_named(&named), Err(BnError::IncompleteAssignment));
    }

    #[test]
    fn rejects_bad_rows() {
        let dag = Dag::from_edges(&[("A", 2)], &[]).unwrap();
        assert!(BayesNet::new(dag.clone(), vec![Cpt::new(2, vec![vec![0.5, 0.6]])]).is_err());
        assert!(BayesNet::new(dag, vec![Cpt::new(2, vec![vec![0.5, 0.5], vec![0.5, 0.5]])]).is_err());
    }

    #[test]
    fn json_round_trip_and_row_order() {
        let dag = Dag::from_edges(
            &[("A", 2), ("B", 3), ("C", 2)],
            &[("A", "C"), ("B", "C")],
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..6).map(|j| vec![j as f64 / 10.0, 1.0 - j as f64 / 10.0]).collect();
        let net = BayesNet::new(
            dag,
            vec![
                Cpt::new(2, vec![vec![0.5, 0.5]]),
                Cpt::new(3, vec![vec![0.2, 0.3, 0.5]]),
                Cpt::new(2, rows),
            ],
        )
        .unwrap();
        // config index = a * 3 + b: first parent slowest
        assert_eq!(net.config_index(2, &[1, 2, 0]), 5);
        let doc = net.to_json();
        assert_eq!(doc["nodes"][2]["parents"], json!(["A", "B"]));
        assert_eq!(BayesNet::from_json(&doc).unwrap(), net);
    }
}
