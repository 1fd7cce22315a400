//! Confirmatory structural equation models: syntax, implied covariance,
//! maximum-likelihood fitting, fit indices and factor scores.

mod fit;
mod implied;
mod indices;
mod model;
pub mod optim;
mod parser;
mod scores;

use thiserror::Error;

pub use fit::{
    discrepancy, fit_ml, fit_moments, model_rows, start_values, HeywoodWarning, LoadingSummary,
    ParameterEstimate, SampleMoments, SemFit,
};
pub use implied::{full_covariance, implied_covariance, RamMatrices};
pub use indices::{cfi, fit_indices, rmsea, srmr, FitIndices};
pub use model::{CovarianceTerm, DirectedEdge, EdgeKind, FreeParameter, ParamSpec, SemModel};
pub use parser::parse_model_spec;
pub use scores::{factor_scores, score_weights, FactorScoreMatrix};

#[derive(Debug, Error)]
pub enum SemError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("directed cycle among: {0}")]
    Cycle(String),
    #[error("latent `{0}` has no path to an observed indicator")]
    UnderidentifiedLatent(String),
    #[error("statement given twice: {0}")]
    DuplicateStatement(String),
    #[error("I - A is singular")]
    SingularSystem,
    #[error("variable `{0}` not found in the data")]
    UnknownVariable(String),
    #[error("need more complete cases than observed variables (n = {n}, q = {q})")]
    InsufficientData { n: usize, q: usize },
    #[error("sample covariance matrix is not positive definite")]
    NonPositiveDefiniteSample,
    #[error("start values give a non-positive-definite implied covariance")]
    InadmissibleStart,
    #[error("optimizer stopped after {iterations} iterations (gradient max-norm {gradient_max:.3e})")]
    NonConvergence { iterations: usize, gradient_max: f64 },
    #[error("model has more free parameters than sample moments (df = {0})")]
    NegativeDf(i64),
    #[error("RMSEA is undefined with zero degrees of freedom")]
    ZeroDf,
    #[error("implied covariance is singular")]
    SingularImpliedCov,
}
