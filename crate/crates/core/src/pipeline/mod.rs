//! End-to-end orchestration: one config in, a directory of plot-ready JSON
//! and CSV artifacts out.

mod config;
pub mod json;
mod run;

use std::fmt;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::bn::BnError;
use crate::dataset::DataError;
use crate::discretize::DiscretizeError;
use crate::sem::SemError;

pub use config::{
    AnalysisConfig, ContourConfig, DataConfig, DiscretizeConfig, EstimatorConfig, EstimatorKind, ModelConfig,
    OutputConfig, PipelineConfig, PredictionConfig, SplitConfig, VariableGroup,
};
pub use run::{
    compare_estimators, compare_on, default_evidence, run_pipeline, validate, Comparison, EstimatorMetrics,
    RunOptions, RunSummary, ValidationReport, ARTIFACTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    SemFit,
    Scores,
    Split,
    Discretize,
    Network,
    Estimate,
    Metrics,
    Analytics,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::SemFit => "sem_fit",
            Stage::Scores => "scores",
            Stage::Split => "split",
            Stage::Discretize => "discretize",
            Stage::Network => "network",
            Stage::Estimate => "estimate",
            Stage::Metrics => "metrics",
            Stage::Analytics => "analytics",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

/// Failure class; the CLI maps these to exit codes 2, 3 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Stage::Config, ErrorKind::Config, message)
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

pub(crate) fn data_error(stage: Stage, e: DataError) -> PipelineError {
    let kind = match e {
        DataError::InvalidFraction(_) | DataError::DuplicateVariable(_) | DataError::TooFewLevels { .. } => {
            ErrorKind::Config
        }
        _ => ErrorKind::Data,
    };
    PipelineError::new(stage, kind, e.to_string())
}

pub(crate) fn sem_error(stage: Stage, e: SemError) -> PipelineError {
    let kind = match e {
        SemError::Syntax { .. }
        | SemError::Cycle(_)
        | SemError::UnderidentifiedLatent(_)
        | SemError::DuplicateStatement(_)
        | SemError::UnknownVariable(_)
        | SemError::NegativeDf(_) => ErrorKind::Config,
        SemError::InsufficientData { .. } | SemError::NonPositiveDefiniteSample => ErrorKind::Data,
        _ => ErrorKind::Numerical,
    };
    PipelineError::new(stage, kind, e.to_string())
}

pub(crate) fn discretize_error(stage: Stage, e: DiscretizeError) -> PipelineError {
    let kind = match e {
        DiscretizeError::TooFewBins(_) => ErrorKind::Config,
        DiscretizeError::InsufficientData { .. } => ErrorKind::Data,
        DiscretizeError::MissingThresholds(_) => ErrorKind::Numerical,
    };
    PipelineError::new(stage, kind, e.to_string())
}

pub(crate) fn bn_error(stage: Stage, e: BnError) -> PipelineError {
    let kind = match e {
        BnError::UnknownNode(_) | BnError::QueryInEvidence(_) | BnError::InvalidEss(_) | BnError::MissingColumn(_) => {
            ErrorKind::Config
        }
        BnError::EmptyData | BnError::StateOutOfRange { .. } => ErrorKind::Data,
        _ => ErrorKind::Numerical,
    };
    PipelineError::new(stage, kind, e.to_string())
}

pub(crate) fn analysis_error(stage: Stage, e: AnalysisError) -> PipelineError {
    match e {
        AnalysisError::Network(inner) => bn_error(stage, inner),
        AnalysisError::SameNode => PipelineError::new(stage, ErrorKind::Config, e.to_string()),
        other => PipelineError::new(stage, ErrorKind::Numerical, other.to_string()),
    }
}
