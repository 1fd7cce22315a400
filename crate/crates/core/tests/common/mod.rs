//! Test-only helpers: random networks and a full-joint enumeration oracle
//! that does not use the factor machinery.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sembn::bn::{BayesNet, Cpt, Dag, NodeSpec};

pub fn random_net(rng: &mut ChaCha8Rng, max_nodes: usize, max_levels: usize, positive: bool) -> BayesNet {
    let n = rng.random_range(2..=max_nodes);
    let mut specs = Vec::with_capacity(n);
    for v in 0..n {
        let mut parents = Vec::new();
        for p in 0..v {
            if parents.len() < 3 && rng.random_bool(0.45) {
                parents.push(format!("N{p}"));
            }
        }
        specs.push(NodeSpec {
            name: format!("N{v}"),
            levels: rng.random_range(2..=max_levels),
            parents,
        });
    }
    // shuffle declaration order so node indices are not topological
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        specs.swap(i, j);
    }
    let dag = Dag::new(&specs).unwrap();
    let cpts = (0..dag.len())
        .map(|v| {
            let r = dag.levels(v);
            let rows = (0..dag.config_count(v))
                .map(|_| {
                    let mut raw: Vec<f64> = (0..r)
                        .map(|_| {
                            let x: f64 = rng.random();
                            if !positive && x < 0.15 {
                                0.0
                            } else {
                                x + 0.01
                            }
                        })
                        .collect();
                    if raw.iter().all(|&x| x == 0.0) {
                        raw[0] = 1.0;
                    }
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                })
                .collect();
            Cpt::new(r, rows)
        })
        .collect();
    BayesNet::new(dag, cpts).unwrap()
}

/// Parent configuration index with the first parent varying slowest.
pub fn parent_config(net: &BayesNet, node: usize, states: &[usize]) -> usize {
    let dag = net.dag();
    dag.parents(node)
        .iter()
        .fold(0, |acc, &p| acc * dag.levels(p) + states[p])
}

pub fn joint(net: &BayesNet, states: &[usize]) -> f64 {
    (0..states.len())
        .map(|v| net.cpt(v).rows()[parent_config(net, v, states)][states[v]])
        .product()
}

/// Every full assignment with its joint probability.
pub fn enumerate(net: &BayesNet) -> Vec<(Vec<usize>, f64)> {
    let dag = net.dag();
    let cards: Vec<usize> = (0..dag.len()).map(|v| dag.levels(v)).collect();
    let mut out = Vec::new();
    let mut states = vec![0; cards.len()];
    loop {
        out.push((states.clone(), joint(net, &states)));
        let mut i = cards.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            states[i] += 1;
            if states[i] < cards[i] {
                break;
            }
            states[i] = 0;
        }
    }
}

/// `P(query | evidence)` by summing the full joint; `None` if `P(evidence) = 0`.
pub fn brute_posterior(net: &BayesNet, query: usize, evidence: &[(usize, usize)]) -> Option<Vec<f64>> {
    let mut p = vec![0.0; net.dag().levels(query)];
    for (s, w) in enumerate(net) {
        if evidence.iter().all(|&(v, x)| s[v] == x) {
            p[s[query]] += w;
        }
    }
    let z: f64 = p.iter().sum();
    (z > 0.0).then(|| p.into_iter().map(|x| x / z).collect())
}

/// Joint table of `(x, y)` as `[x][y]`.
pub fn brute_pair(net: &BayesNet, x: usize, y: usize) -> Vec<Vec<f64>> {
    let dag = net.dag();
    let mut t = vec![vec![0.0; dag.levels(y)]; dag.levels(x)];
    for (s, w) in enumerate(net) {
        t[s[x]][s[y]] += w;
    }
    t
}
