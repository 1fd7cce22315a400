use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fit::{observed_columns, SemFit};
use super::SemError;
use crate::dataset::ObservedDataset;

/// Per-case latent scores; rows align with the input dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorScoreMatrix {
    pub case_ids: Vec<String>,
    pub latents: Vec<String>,
    /// `values[case][latent]`; `None` for cases incomplete on the indicators.
    pub values: Vec<Vec<Option<f64>>>,
}

impl FactorScoreMatrix {
    pub fn column(&self, latent: &str) -> Option<Vec<Option<f64>>> {
        let j = self.latents.iter().position(|l| l == latent)?;
        Some(self.values.iter().map(|r| r[j]).collect())
    }
}

/// Regression-method weights `Sigma^-1 Cov(x, latents)`, one column per latent.
pub fn score_weights(fit: &SemFit) -> Result<DMatrix<f64>, SemError> {
    let q = fit.model.q();
    let m = fit.model.latents().len();
    let inv = fit
        .implied_cov
        .clone()
        .cholesky()
        .ok_or(SemError::SingularImpliedCov)?
        .inverse();
    let cross = fit.latent_cov.view((0, q), (q, m)).into_owned();
    Ok(inv * cross)
}

/// Regression-method factor scores, centered at the fitting sample's means.
pub fn factor_scores(fit: &SemFit, data: &ObservedDataset) -> Result<FactorScoreMatrix, SemError> {
    let cols = observed_columns(&fit.model, data)?;
    let weights = score_weights(fit)?;
    let values = data
        .rows()
        .iter()
        .map(|row| {
            let x: Option<Vec<f64>> = cols.iter().map(|&c| row[c]).collect();
            match x {
                Some(x) => {
                    let centered = DVector::from_vec(x) - &fit.sample.mean;
                    let s = weights.tr_mul(&centered);
                    s.iter().map(|&v| Some(v)).collect()
                }
                None => vec![None; weights.ncols()],
            }
        })
        .collect();
    Ok(FactorScoreMatrix {
        case_ids: data.case_ids().to_vec(),
        latents: fit.model.latents().to_vec(),
        values,
    })
}
