use std::collections::HashMap;

use super::BnError;
use crate::sem::SemModel;

/// A node as written in a network document: name, level count and ordered
/// parent names.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub levels: usize,
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    names: Vec<String>,
    levels: Vec<usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    pub fn new(nodes: &[NodeSpec]) -> Result<Self, BnError> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(BnError::DuplicateNode(n.name.clone()));
            }
            if n.levels == 0 {
                return Err(BnError::NoLevels(n.name.clone()));
            }
        }
        let mut parents = Vec::with_capacity(nodes.len());
        for n in nodes {
            let mut ps = Vec::with_capacity(n.parents.len());
            for p in &n.parents {
                let &pi = index.get(p).ok_or_else(|| BnError::UnknownNode(p.clone()))?;
                if ps.contains(&pi) {
                    return Err(BnError::DuplicateNode(p.clone()));
                }
                ps.push(pi);
            }
            parents.push(ps);
        }
        let mut children = vec![Vec::new(); nodes.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
        let topo = topological_order(&names, &parents, &children)?;
        Ok(Self {
            names,
            levels: nodes.iter().map(|n| n.levels).collect(),
            parents,
            children,
            topo,
        })
    }

    /// Builds a DAG from node cardinalities and `(parent, child)` edges.
    /// Parent order follows edge order.
    pub fn from_edges(nodes: &[(&str, usize)], edges: &[(&str, &str)]) -> Result<Self, BnError> {
        let specs: Vec<NodeSpec> = nodes
            .iter()
            .map(|&(name, levels)| NodeSpec {
                name: name.to_string(),
                levels,
                parents: edges
                    .iter()
                    .filter(|(_, c)| *c == name)
                    .map(|(p, _)| p.to_string())
                    .collect(),
            })
            .collect();
        for (p, c) in edges {
            for n in [p, c] {
                if !nodes.iter().any(|(name, _)| name == n) {
                    return Err(BnError::UnknownNode(n.to_string()));
                }
            }
        }
        Self::new(&specs)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn index(&self, name: &str) -> Result<usize, BnError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| BnError::UnknownNode(name.to_string()))
    }

    pub fn levels(&self, node: usize) -> usize {
        self.levels[node]
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Number of parent configurations of `node`.
    pub fn config_count(&self, node: usize) -> usize {
        self.parents[node].iter().map(|&p| self.levels[p]).product()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|c| self.parents[c].iter().map(move |&p| (p, c)))
            .collect()
    }

    pub fn node_specs(&self) -> Vec<NodeSpec> {
        (0..self.len())
            .map(|i| NodeSpec {
                name: self.names[i].clone(),
                levels: self.levels[i],
                parents: self.parents[i].iter().map(|&p| self.names[p].clone()).collect(),
            })
            .collect()
    }

    /// `nodes` together with all their ancestors.
    pub fn ancestral_set(&self, nodes: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = nodes.into_iter().collect();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(&self.parents[v]);
            }
        }
        mark
    }

    /// Strict descendants of `node`.
    pub fn descendants(&self, node: usize) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = self.children[node].clone();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(&self.children[v]);
            }
        }
        mark
    }
}

fn topological_order(
    names: &[String],
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, BnError> {
    let n = names.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    // Smallest index first keeps the order deterministic.
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<&str> = (0..n)
            .filter(|&v| indegree[v] > 0)
            .map(|v| names[v].as_str())
            .collect();
        return Err(BnError::Cycle(stuck.join(", ")));
    }
    Ok(order)
}

/// DAG over the model's latents with the directed latent-to-latent edges of
/// the model (structural regressions source -> target, higher-order factor
/// -> lower-order factor). `levels` supplies each latent's level count.
pub fn dag_from_sem(model: &SemModel, levels: &dyn Fn(&str) -> usize) -> Result<Dag, BnError> {
    let nodes: Vec<(&str, usize)> = model
        .latents()
        .iter()
        .map(|l| (l.as_str(), levels(l)))
        .collect();
    let edges = model.latent_edges();
    let dag = Dag::from_edges(&nodes, &edges)?;
    Ok(dag)
}

/// Like [`dag_from_sem`] but also adds observed indicators as child nodes
/// of the latents that load on them.
pub fn dag_from_sem_with_indicators(model: &SemModel, levels: &dyn Fn(&str) -> usize) -> Result<Dag, BnError> {
    let names = model.variable_names();
    let latents_first: Vec<&str> = model
        .latents()
        .iter()
        .map(String::as_str)
        .chain(model.observed().iter().map(String::as_str))
        .collect();
    let nodes: Vec<(&str, usize)> = latents_first.iter().map(|&n| (n, levels(n))).collect();
    let edges: Vec<(&str, &str)> = model
        .directed_edges()
        .iter()
        .map(|e| (names[e.from], names[e.to]))
        .collect();
    Dag::from_edges(&nodes, &edges)
}
