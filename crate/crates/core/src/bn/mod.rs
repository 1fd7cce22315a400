//! Discrete Bayesian networks over a fixed, theory-given DAG.
//!
//! State indices inside this module are 0-based; [`DiscreteDataset`] levels
//! are 1-based and converted at the estimator and prediction boundaries.
//!
//! [`DiscreteDataset`]: crate::discretize::DiscreteDataset

mod dag;
mod dsep;
mod factor;
mod inference;
mod learn;
mod net;

use thiserror::Error;

pub use dag::{dag_from_sem, dag_from_sem_with_indicators, Dag, NodeSpec};
pub use dsep::{d_separated, d_separated_by_name};
pub use factor::Factor;
pub use inference::{elimination_order, joint_posterior, posterior, Evidence, PosteriorDistribution};
pub use learn::{fit_bdeu, fit_em, fit_mle, EmOptions, EmOutcome, Estimate, DEFAULT_BDEU_ESS, EM_INIT_NOISE};
pub use net::{BayesNet, Cpt};

#[derive(Debug, Error, PartialEq)]
pub enum BnError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("node `{0}` needs at least one level")]
    NoLevels(String),
    #[error("graph has a directed cycle through: {0}")]
    Cycle(String),
    #[error("CPT for `{node}`: {reason}")]
    BadCpt { node: String, reason: String },
    #[error("state {state} out of range for `{node}` ({levels} levels)")]
    StateOutOfRange { node: String, state: usize, levels: usize },
    #[error("assignment does not cover every node")]
    IncompleteAssignment,
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,
    #[error("query node `{0}` is also observed")]
    QueryInEvidence(String),
    #[error("data column missing for node `{0}`")]
    MissingColumn(String),
    #[error("no usable cases")]
    EmptyData,
    #[error("equivalent sample size must be positive, got {0}")]
    InvalidEss(f64),
    #[error("malformed network document: {0}")]
    Format(String),
}
