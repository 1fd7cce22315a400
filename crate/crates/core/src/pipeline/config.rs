use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::LogBase;
use crate::dataset::{VariableKind, VariableSchema, DEFAULT_MISSING_CODES};
use crate::discretize::ThresholdScope;

use super::PipelineError;

/// One run of the pipeline, read from TOML. Relative paths are resolved
/// against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub discretize: DiscretizeConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub prediction: PredictionConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub id_column: Option<String>,
    /// Column declarations; each group shares one kind.
    pub variables: Vec<VariableGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableGroup {
    pub names: Vec<String>,
    #[serde(flatten)]
    pub kind: VariableKind,
    #[serde(default = "default_missing_codes")]
    pub missing_codes: Vec<String>,
}

fn default_missing_codes() -> Vec<String> {
    DEFAULT_MISSING_CODES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Model specification text (`=~`, `~`, `~~`).
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeConfig {
    #[serde(default = "default_k_bins")]
    pub k_bins: usize,
    #[serde(default)]
    pub threshold_scope: ThresholdScope,
}

fn default_k_bins() -> usize {
    5
}

impl Default for DiscretizeConfig {
    fn default() -> Self {
        Self {
            k_bins: default_k_bins(),
            threshold_scope: ThresholdScope::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Mle,
    Em,
    Bdeu,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::Em => "em",
            EstimatorKind::Bdeu => "bdeu",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_estimator")]
    pub method: EstimatorKind,
    #[serde(default = "default_ess")]
    pub ess: f64,
    #[serde(default = "default_em_tol")]
    pub em_tol: f64,
    #[serde(default = "default_em_max_iter")]
    pub em_max_iter: usize,
    #[serde(default = "default_em_seed")]
    pub em_seed: u64,
    /// Add observed items as leaf nodes of the network.
    #[serde(default)]
    pub include_indicators: bool,
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Bdeu
}
fn default_ess() -> f64 {
    crate::bn::DEFAULT_BDEU_ESS
}
fn default_em_tol() -> f64 {
    1e-6
}
fn default_em_max_iter() -> usize {
    500
}
fn default_em_seed() -> u64 {
    1
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: default_estimator(),
            ess: default_ess(),
            em_tol: default_em_tol(),
            em_max_iter: default_em_max_iter(),
            em_seed: default_em_seed(),
            include_indicators: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_split_seed")]
    pub seed: u64,
}

fn default_fraction() -> f64 {
    0.7
}
fn default_split_seed() -> u64 {
    1
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            fraction: default_fraction(),
            seed: default_split_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionConfig {
    pub target: String,
    /// Evidence nodes; when absent, every node that is neither the target
    /// nor one of its descendants.
    #[serde(default)]
    pub evidence: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub target: String,
    pub axes: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub log_base: LogBase,
    /// Defaults to the prediction target and its two parents when it has
    /// exactly two.
    #[serde(default)]
    pub contour: Option<ContourConfig>,
    /// Nodes whose children get conditional profiles; defaults to every node
    /// with children.
    #[serde(default)]
    pub profiles: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::config(e.to_string()))
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        config.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(config)
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.data.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output.dir)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schema(&self) -> Vec<VariableSchema> {
        self.data
            .variables
            .iter()
            .flat_map(|g| {
                g.names.iter().map(|n| VariableSchema {
                    name: n.clone(),
                    kind: g.kind,
                    missing_codes: g.missing_codes.clone(),
                })
            })
            .collect()
    }
}
