//! CPT estimation: maximum likelihood, EM for incomplete data, and BDeu
//! posterior means.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dag::Dag;
use super::inference::{joint_posterior, Evidence};
use super::net::{BayesNet, Cpt};
use super::BnError;
use crate::discretize::DiscreteDataset;

pub const DEFAULT_BDEU_ESS: f64 = 1.0;
/// Amplitude of the uniform perturbation applied to EM's starting tables.
pub const EM_INIT_NOISE: f64 = 0.01;

/// A fitted network plus bookkeeping about the data it saw.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub net: BayesNet,
    pub rows_used: usize,
    pub rows_dropped: usize,
    /// `(node, parent config)` rows that had no data and were set uniform.
    pub unseen_configs: Vec<(String, usize)>,
}

type Counts = Vec<Vec<Vec<f64>>>;

/// Per-case 0-based states in DAG node order.
fn node_states(dag: &Dag, data: &DiscreteDataset) -> Result<Vec<Vec<Option<usize>>>, BnError> {
    let cols = (0..dag.len())
        .map(|v| {
            data.column_index(dag.name(v))
                .ok_or_else(|| BnError::MissingColumn(dag.name(v).to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    data.rows
        .iter()
        .map(|row| {
            cols.iter()
                .enumerate()
                .map(|(v, &c)| match row[c] {
                    None => Ok(None),
                    Some(level) if level >= 1 && level <= dag.levels(v) => Ok(Some(level - 1)),
                    Some(level) => Err(BnError::StateOutOfRange {
                        node: dag.name(v).to_string(),
                        state: level,
                        levels: dag.levels(v),
                    }),
                })
                .collect()
        })
        .collect()
}

fn zero_counts(dag: &Dag) -> Counts {
    (0..dag.len())
        .map(|v| vec![vec![0.0; dag.levels(v)]; dag.config_count(v)])
        .collect()
}

fn config_of(dag: &Dag, node: usize, states: &[usize]) -> usize {
    dag.parents(node)
        .iter()
        .fold(0, |acc, &p| acc * dag.levels(p) + states[p])
}

fn complete_counts(dag: &Dag, cases: &[Vec<usize>]) -> Counts {
    let mut counts = zero_counts(dag);
    for states in cases {
        for v in 0..dag.len() {
            counts[v][config_of(dag, v, states)][states[v]] += 1.0;
        }
    }
    counts
}

/// Normalizes each row of `counts + pseudo`; rows with no mass become
/// uniform and are reported.
fn normalize(dag: &Dag, counts: &Counts, pseudo: impl Fn(usize) -> f64) -> (BayesNet, Vec<(String, usize)>) {
    let mut unseen = Vec::new();
    let mut cpts = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        let alpha = pseudo(v);
        let r = dag.levels(v);
        let rows = counts[v]
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let total: f64 = row.iter().sum::<f64>() + alpha * r as f64;
                if total > 0.0 {
                    row.iter().map(|c| (c + alpha) / total).collect()
                } else {
                    unseen.push((dag.name(v).to_string(), j));
                    vec![1.0 / r as f64; r]
                }
            })
            .collect();
        cpts.push(Cpt::new(r, rows));
    }
    (BayesNet::new(dag.clone(), cpts).expect("normalized tables"), unseen)
}

fn split_complete(states: Vec<Vec<Option<usize>>>) -> (Vec<Vec<usize>>, usize) {
    let total = states.len();
    let complete: Vec<Vec<usize>> = states
        .into_iter()
        .filter_map(|r| r.into_iter().collect::<Option<Vec<usize>>>())
        .collect();
    let dropped = total - complete.len();
    (complete, dropped)
}

/// `theta_ijk = N_ijk / N_ij`. Cases with a missing node are dropped.
pub fn fit_mle(dag: &Dag, data: &DiscreteDataset) -> Result<Estimate, BnError> {
    let (cases, rows_dropped) = split_complete(node_states(dag, data)?);
    if cases.is_empty() {
        return Err(BnError::EmptyData);
    }
    let counts = complete_counts(dag, &cases);
    let (net, unseen_configs) = normalize(dag, &counts, |_| 0.0);
    Ok(Estimate {
        net,
        rows_used: cases.len(),
        rows_dropped,
        unseen_configs,
    })
}

/// Posterior-mean CPTs under the BDeu prior,
/// `theta_ijk = (N_ijk + ess/(r_i q_i)) / (N_ij + ess/q_i)`.
pub fn fit_bdeu(dag: &Dag, data: &DiscreteDataset, ess: f64) -> Result<Estimate, BnError> {
    if !(ess > 0.0 && ess.is_finite()) {
        return Err(BnError::InvalidEss(ess));
    }
    let (cases, rows_dropped) = split_complete(node_states(dag, data)?);
    let counts = complete_counts(dag, &cases);
    let (net, unseen_configs) = normalize(dag, &counts, |v| {
        ess / (dag.levels(v) as f64 * dag.config_count(v) as f64)
    });
    Ok(Estimate {
        net,
        rows_used: cases.len(),
        rows_dropped,
        unseen_configs,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmOptions {
    /// Stop when the log-likelihood gain of one iteration is below this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Dirichlet-style pseudo-count added in every M-step (0 = plain ML).
    pub prior_weight: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            seed: 1,
            prior_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub net: BayesNet,
    /// Observed-data log-likelihood at the start of each iteration.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rows_used: usize,
}

/// Uniform tables perturbed by `U(0, EM_INIT_NOISE)` per entry, renormalized.
fn perturbed_start(dag: &Dag, seed: u64) -> BayesNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cpts = (0..dag.len())
        .map(|v| {
            let r = dag.levels(v);
            let rows = (0..dag.config_count(v))
                .map(|_| {
                    let raw: Vec<f64> = (0..r)
                        .map(|_| 1.0 / r as f64 + EM_INIT_NOISE * rng.random::<f64>())
                        .collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                })
                .collect();
            Cpt::new(r, rows)
        })
        .collect();
    BayesNet::new(dag.clone(), cpts).expect("normalized start")
}

/// Expected sufficient statistics and observed-data log-likelihood.
fn e_step(net: &BayesNet, patterns: &BTreeMap<Vec<Option<usize>>, f64>) -> Result<(Counts, f64), BnError> {
    let dag = net.dag();
    let mut counts = zero_counts(dag);
    let mut ll = 0.0;
    for (pattern, &weight) in patterns {
        if let Some(states) = pattern.iter().copied().collect::<Option<Vec<usize>>>() {
            let p = net.joint_probability(&states)?;
            if p <= 0.0 {
                return Err(BnError::ZeroProbabilityEvidence);
            }
            ll += weight * p.ln();
            for v in 0..dag.len() {
                counts[v][config_of(dag, v, &states)][states[v]] += weight;
            }
            continue;
        }
        let evidence: Evidence = pattern
            .iter()
            .enumerate()
            .filter_map(|(v, s)| s.map(|s| (v, s)))
            .collect();
        let mut log_pe = None;
        for v in 0..dag.len() {
            let family: Vec<usize> = dag.parents(v).iter().copied().chain([v]).collect();
            let hidden: Vec<usize> = family.iter().copied().filter(|u| pattern[*u].is_none()).collect();
            let (joint, pe) = joint_posterior(net, &hidden, &evidence)?;
            if log_pe.is_none() {
                log_pe = Some(pe.ln());
            }
            // enumerate states of the hidden family members
            let mut states: Vec<usize> = pattern.iter().map(|s| s.unwrap_or(0)).collect();
            for (idx, &p) in joint.values().iter().enumerate() {
                let mut rem = idx;
                for (k, &h) in hidden.iter().enumerate().rev() {
                    let card = joint.cards()[k];
                    states[h] = rem % card;
                    rem /= card;
                }
                counts[v][config_of(dag, v, &states)][states[v]] += weight * p;
            }
        }
        ll += weight * log_pe.unwrap_or(0.0);
    }
    Ok((counts, ll))
}

/// EM over cases with missing nodes. Each iteration runs an exact E-step
/// (variable elimination per distinct missingness pattern) and an M-step
/// that renormalizes expected counts.
///
/// Returns the last iterate; `converged` is false when `max_iter` was hit.
pub fn fit_em(dag: &Dag, data: &DiscreteDataset, opts: EmOptions) -> Result<EmOutcome, BnError> {
    let states = node_states(dag, data)?;
    let mut patterns: BTreeMap<Vec<Option<usize>>, f64> = BTreeMap::new();
    let mut rows_used = 0;
    for row in states {
        if row.iter().all(Option::is_none) {
            continue;
        }
        rows_used += 1;
        *patterns.entry(row).or_insert(0.0) += 1.0;
    }
    if patterns.is_empty() {
        return Err(BnError::EmptyData);
    }
    let mut net = perturbed_start(dag, opts.seed);
    let mut lls: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let (counts, ll) = e_step(&net, &patterns)?;
        if let Some(&prev) = lls.last() {
            if ll - prev < opts.tol {
                lls.push(ll);
                converged = true;
                break;
            }
        }
        lls.push(ll);
        net = normalize(dag, &counts, |_| opts.prior_weight).0;
        iterations += 1;
    }
    Ok(EmOutcome {
        net,
        log_likelihoods: lls,
        iterations,
        converged,
        rows_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(columns: &[&str], levels: &[usize], rows: Vec<Vec<Option<usize>>>) -> DiscreteDataset {
        DiscreteDataset {
            case_ids: (1..=rows.len()).map(|i| i.to_string()).collect(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            level_counts: levels.to_vec(),
            rows,
        }
    }

    #[test]
    fn single_binary_node_counts() {
        let dag = Dag::from_edges(&[("A", 2)], &[]).unwrap();
        let d = data(&["A"], &[2], vec![vec![Some(1)], vec![Some(1)], vec![Some(2)]]);
        let est = fit_mle(&dag, &d).unwrap();
        let row = est.net.cpt(0).row(0);
        assert!((row[0] - 2.0 / 3.0).abs() < 1e-15 && (row[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_parent_config_is_uniform_and_flagged() {
        let dag = Dag::from_edges(&[("A", 2), ("B", 3)], &[("A", "B")]).unwrap();
        let d = data(&["A", "B"], &[2, 3], vec![vec![Some(1), Some(2)], vec![Some(1), Some(3)]]);
        let est = fit_mle(&dag, &d).unwrap();
        assert_eq!(est.unseen_configs, vec![("B".to_string(), 1)]);
        assert_eq!(est.net.cpt(1).row(1), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn empty_data_is_an_error() {
        let dag = Dag::from_edges(&[("A", 2)], &[]).unwrap();
        let d = data(&["A"], &[2], vec![vec![None]]);
        assert!(matches!(fit_mle(&dag, &d), Err(BnError::EmptyData)));
        assert!(matches!(fit_em(&dag, &d, EmOptions::default()), Err(BnError::EmptyData)));
    }

    #[test]
    fn bdeu_arithmetic() {
        // counts (3, 1), ess 4, r = 2, q = 1 -> alpha = 2
        let dag = Dag::from_edges(&[("A", 2)], &[]).unwrap();
        let rows = vec![vec![Some(1)], vec![Some(1)], vec![Some(1)], vec![Some(2)], vec![None]];
        let est = fit_bdeu(&dag, &data(&["A"], &[2], rows), 4.0).unwrap();
        assert_eq!(est.net.cpt(0).row(0), &[0.625, 0.375]);
        assert_eq!(est.rows_dropped, 1);
    }

    #[test]
    fn bdeu_without_data_is_uniform() {
        let dag = Dag::from_edges(&[("A", 3), ("B", 2)], &[("A", "B")]).unwrap();
        let est = fit_bdeu(&dag, &data(&["A", "B"], &[3, 2], vec![]), 1.0).unwrap();
        assert_eq!(est.net, BayesNet::uniform(dag));
        assert!(matches!(
            fit_bdeu(&Dag::from_edges(&[("A", 2)], &[]).unwrap(), &data(&["A"], &[2], vec![]), 0.0),
            Err(BnError::InvalidEss(_))
        ));
    }

    #[test]
    fn missing_column_and_out_of_range() {
        let dag = Dag::from_edges(&[("A", 2)], &[]).unwrap();
        assert!(matches!(
            fit_mle(&dag, &data(&["Z"], &[2], vec![vec![Some(1)]])),
            Err(BnError::MissingColumn(_))
        ));
        assert!(matches!(
            fit_mle(&dag, &data(&["A"], &[3], vec![vec![Some(3)]])),
            Err(BnError::StateOutOfRange { .. })
        ));
    }
}
