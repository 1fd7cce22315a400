//! Analytics over a fitted network: information gain, predictions and
//! classification metrics, contour grids and conditional profiles.

mod grid;
mod info;
mod metrics;

use thiserror::Error;

pub use grid::{conditional_profile, contour_grid, ConditionalProfile, ContourGrid};
pub use info::{
    conditional_entropy, entropy, information_gain, info_gain_report, InfoGainEntry, InfoGainReport, LogBase,
};
pub use metrics::{classification_metrics, predict, MetricsReport, Prediction};

use crate::bn::BnError;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("not a probability distribution (sum {sum})")]
    InvalidDistribution { sum: f64 },
    #[error("predicted and true label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("nodes must be distinct")]
    SameNode,
    #[error(transparent)]
    Network(#[from] BnError),
}
