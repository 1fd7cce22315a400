//! Theory-driven causal analysis: a confirmatory structural equation model
//! supplies latent scores and the causal graph for a discrete Bayesian
//! network, which is then estimated and queried exactly.

pub mod dataset;
pub mod sem;
pub mod bn;
pub mod discretize;
pub mod analysis;
pub mod pipeline;
pub mod synthetic;
