use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::implied::{symmetrize, RamMatrices};
use super::model::{EdgeKind, ParamSpec, SemModel};
use super::optim::{self, BfgsOptions};
use super::SemError;
use crate::dataset::ObservedDataset;

/// Mean vector and covariance (divisor `n - 1`) of the observed variables.
#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
}

impl SampleMoments {
    /// `rows` are complete observations in model-observed order.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SemError> {
        let n = rows.len();
        let q = rows.first().map_or(0, Vec::len);
        if n < 2 || n <= q {
            return Err(SemError::InsufficientData { n, q });
        }
        let mut mean = DVector::zeros(q);
        for r in rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(q, q);
        for r in rows {
            let d = DVector::from_column_slice(r) - &mean;
            cov.ger(1.0, &d, &d, 1.0);
        }
        cov /= (n - 1) as f64;
        Ok(Self { mean, cov, n })
    }
}

/// Complete-case rows of `data` restricted to the model's observed variables.
pub fn model_rows(model: &SemModel, data: &ObservedDataset) -> Result<(Vec<usize>, Vec<Vec<f64>>), SemError> {
    let cols = observed_columns(model, data)?;
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    for (r, row) in data.rows().iter().enumerate() {
        let vals: Option<Vec<f64>> = cols.iter().map(|&c| row[c]).collect();
        if let Some(v) = vals {
            kept.push(r);
            rows.push(v);
        }
    }
    Ok((kept, rows))
}

pub(crate) fn observed_columns(model: &SemModel, data: &ObservedDataset) -> Result<Vec<usize>, SemError> {
    model
        .observed()
        .iter()
        .map(|name| {
            data.column_index(name)
                .ok_or_else(|| SemError::UnknownVariable(name.clone()))
        })
        .collect()
}

/// ML discrepancy `ln|Sigma| + tr(S Sigma^-1) - ln|S| - q` and its gradient
/// with respect to the free parameters (natural scale). `None` when the
/// implied covariance is not positive definite.
pub fn discrepancy(model: &SemModel, theta: &[f64], sample: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
    let q = model.q();
    let ram = RamMatrices::new(model, theta).ok()?;
    let full = ram.full_covariance();
    let sigma = full.view((0, 0), (q, q)).into_owned();
    let chol = sigma.clone().cholesky()?;
    let logdet_sigma = 2.0 * chol.l().diagonal().map(f64::ln).sum();
    let sample_chol = sample.clone().cholesky()?;
    let logdet_sample = 2.0 * sample_chol.l().diagonal().map(f64::ln).sum();
    let inv = chol.inverse();
    let f = logdet_sigma + (sample * &inv).trace() - logdet_sample - q as f64;
    if !f.is_finite() {
        return None;
    }

    let w = symmetrize(&inv * (&sigma - sample) * &inv);
    let n = model.n_vars();
    let mut g_full = DMatrix::zeros(n, n);
    g_full.view_mut((0, 0), (q, q)).copy_from(&w);
    let bt_g = ram.b.transpose() * g_full;
    let d_a = &bt_g * &full * 2.0;
    let d_s = &bt_g * &ram.b;

    let mut grad = vec![0.0; model.n_free()];
    for e in model.directed_edges() {
        if let ParamSpec::Free(k) = e.param {
            grad[k] += d_a[(e.to, e.from)];
        }
    }
    for c in model.covariance_terms() {
        if let ParamSpec::Free(k) = c.param {
            grad[k] += if c.a == c.b {
                d_s[(c.a, c.a)]
            } else {
                d_s[(c.a, c.b)] + d_s[(c.b, c.a)]
            };
        }
    }
    Some((f, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeywoodWarning {
    pub label: String,
    pub value: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SemFit {
    pub model: SemModel,
    /// Free parameter values on the natural scale, in model order.
    pub theta: Vec<f64>,
    pub implied_cov: DMatrix<f64>,
    /// Implied covariance over observed and latent variables.
    pub latent_cov: DMatrix<f64>,
    pub sample: SampleMoments,
    pub discrepancy: f64,
    pub chi_square: f64,
    pub df: i64,
    pub baseline_chi_square: f64,
    pub baseline_df: i64,
    pub n: usize,
    pub iterations: usize,
    pub gradient_max: f64,
    pub warnings: Vec<HeywoodWarning>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterEstimate {
    pub label: String,
    pub op: &'static str,
    pub lhs: String,
    pub rhs: String,
    pub free: bool,
    pub value: f64,
    pub std_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadingSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SemFit {
    pub fn estimates(&self) -> BTreeMap<String, f64> {
        self.model
            .free_parameters()
            .iter()
            .zip(&self.theta)
            .map(|(p, &v)| (p.label.clone(), v))
            .collect()
    }

    fn sd(&self, v: usize) -> f64 {
        self.latent_cov[(v, v)].max(0.0).sqrt()
    }

    /// Every parameter (free and fixed) with its completely standardized value.
    pub fn parameter_table(&self) -> Vec<ParameterEstimate> {
        let m = &self.model;
        let mut out = Vec::new();
        for e in m.directed_edges() {
            let value = SemModel::value(e.param, &self.theta);
            let (op, lhs, rhs) = match e.kind {
                EdgeKind::Loading => ("=~", m.name(e.from), m.name(e.to)),
                EdgeKind::Regression => ("~", m.name(e.to), m.name(e.from)),
            };
            out.push(ParameterEstimate {
                label: m.label(e.param).map_or_else(|| format!("{lhs}{op}{rhs}"), str::to_string),
                op,
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
                free: matches!(e.param, ParamSpec::Free(_)),
                value,
                std_value: value * self.sd(e.from) / self.sd(e.to),
            });
        }
        for c in m.covariance_terms() {
            let value = SemModel::value(c.param, &self.theta);
            let (lhs, rhs) = (m.name(c.a), m.name(c.b));
            // Variances and residual covariances are scaled by total variances.
            let std_value = value / (self.sd(c.a) * self.sd(c.b));
            out.push(ParameterEstimate {
                label: m.label(c.param).map_or_else(|| format!("{lhs}~~{rhs}"), str::to_string),
                op: "~~",
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
                free: matches!(c.param, ParamSpec::Free(_)),
                value,
                std_value,
            });
        }
        out
    }

    /// Mean, minimum and maximum standardized loading of each latent on its
    /// indicators.
    pub fn loading_summary(&self) -> BTreeMap<String, LoadingSummary> {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for p in self.parameter_table().into_iter().filter(|p| p.op == "=~") {
            groups.entry(p.lhs).or_default().push(p.std_value);
        }
        groups
            .into_iter()
            .map(|(k, v)| {
                let count = v.len();
                let mean = v.iter().sum::<f64>() / count as f64;
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (k, LoadingSummary { mean, min, max, count })
            })
            .collect()
    }
}

/// Fits `model` by maximum likelihood on the listwise-complete rows of `data`.
pub fn fit_ml(model: &SemModel, data: &ObservedDataset) -> Result<SemFit, SemError> {
    let (_, rows) = model_rows(model, data)?;
    let sample = SampleMoments::from_rows(&rows)?;
    fit_moments(model, sample, BfgsOptions::default())
}

pub fn fit_moments(model: &SemModel, sample: SampleMoments, opts: BfgsOptions) -> Result<SemFit, SemError> {
    let q = model.q();
    if sample.cov.nrows() != q {
        return Err(SemError::InsufficientData { n: sample.n, q });
    }
    if sample.cov.clone().cholesky().is_none() {
        return Err(SemError::NonPositiveDefiniteSample);
    }

    let start = start_values(model, &sample.cov);
    let is_var: Vec<bool> = model.free_parameters().iter().map(|p| p.is_variance).collect();
    let to_natural = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(&is_var)
            .map(|(&x, &v)| if v { x.exp() } else { x })
            .collect()
    };
    let u0: Vec<f64> = start
        .iter()
        .zip(&is_var)
        .map(|(&x, &v)| if v { x.ln() } else { x })
        .collect();
    let cov = &sample.cov;
    let objective = |u: &[f64]| {
        let theta = to_natural(u);
        let (f, mut g) = discrepancy(model, &theta, cov)?;
        for ((gk, &v), &t) in g.iter_mut().zip(&is_var).zip(&theta) {
            if v {
                *gk *= t;
            }
        }
        Some((f, g))
    };
    if objective(&u0).is_none() {
        return Err(SemError::InadmissibleStart);
    }
    let result = optim::minimize(objective, &u0, opts);
    let gradient_max = result.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if !result.converged {
        return Err(SemError::NonConvergence {
            iterations: result.iterations,
            gradient_max,
        });
    }
    let theta = to_natural(&result.x);
    let df = model.degrees_of_freedom();
    if df < 0 {
        return Err(SemError::NegativeDf(df));
    }
    let mut fit = SemFit::from_parameters(model, theta, sample)?;
    fit.iterations = result.iterations;
    fit.gradient_max = gradient_max;
    Ok(fit)
}

impl SemFit {
    /// Evaluates the model at fixed parameter values against `sample`
    /// without optimizing.
    pub fn from_parameters(model: &SemModel, theta: Vec<f64>, sample: SampleMoments) -> Result<SemFit, SemError> {
        let q = model.q();
        let ram = RamMatrices::new(model, &theta)?;
        let latent_cov = ram.full_covariance();
        let implied_cov = latent_cov.view((0, 0), (q, q)).into_owned();
        let s_logdet = 2.0
            * sample
                .cov
                .clone()
                .cholesky()
                .ok_or(SemError::NonPositiveDefiniteSample)?
                .l()
                .diagonal()
                .map(f64::ln)
                .sum();
        let discrepancy = discrepancy(model, &theta, &sample.cov)
            .ok_or(SemError::SingularImpliedCov)?
            .0
            .max(0.0);
        let n = sample.n;
        let baseline_f = (0..q).map(|i| sample.cov[(i, i)].ln()).sum::<f64>() - s_logdet;
        let qi = q as i64;
        let mut fit = SemFit {
            model: model.clone(),
            theta,
            implied_cov,
            latent_cov,
            discrepancy,
            chi_square: (n - 1) as f64 * discrepancy,
            df: model.degrees_of_freedom(),
            baseline_chi_square: (n - 1) as f64 * baseline_f.max(0.0),
            baseline_df: qi * (qi + 1) / 2 - qi,
            n,
            iterations: 0,
            gradient_max: f64::NAN,
            warnings: Vec::new(),
            sample,
        };
        fit.warnings = heywood_warnings(&fit);
        Ok(fit)
    }
}

fn heywood_warnings(fit: &SemFit) -> Vec<HeywoodWarning> {
    let q = fit.model.q();
    let scale = (0..q).map(|i| fit.sample.cov[(i, i)]).sum::<f64>() / q.max(1) as f64;
    let mut out = Vec::new();
    for c in fit.model.covariance_terms().iter().filter(|c| c.is_variance()) {
        let value = SemModel::value(c.param, &fit.theta);
        if value <= 1e-6 * scale {
            out.push(HeywoodWarning {
                label: format!("{0}~~{0}", fit.model.name(c.a)),
                value,
                reason: "variance at or below zero boundary".into(),
            });
        }
    }
    for p in fit.parameter_table() {
        if p.op == "=~" && p.std_value.abs() > 1.0 {
            out.push(HeywoodWarning {
                label: p.label,
                value: p.std_value,
                reason: "standardized loading exceeds 1".into(),
            });
        }
    }
    out
}

/// Marker-scaled start values: loadings 1 (signed by the indicator's sample
/// covariance with its block's marker), residual variances half the sample
/// variance, latent variances 0.05, everything else 0.
pub fn start_values(model: &SemModel, cov: &DMatrix<f64>) -> Vec<f64> {
    let q = model.q();
    let mut theta = vec![0.0; model.n_free()];
    let mut marker: BTreeMap<usize, usize> = BTreeMap::new();
    for e in model.directed_edges() {
        if e.kind == EdgeKind::Loading {
            marker.entry(e.from).or_insert(e.to);
        }
    }
    for e in model.directed_edges() {
        if let ParamSpec::Free(k) = e.param {
            theta[k] = match e.kind {
                EdgeKind::Loading => {
                    let m = marker[&e.from];
                    if m < q && e.to < q && m != e.to && cov[(m, e.to)] < 0.0 {
                        -1.0
                    } else {
                        1.0
                    }
                }
                EdgeKind::Regression => 0.0,
            };
        }
    }
    for c in model.covariance_terms() {
        if let ParamSpec::Free(k) = c.param {
            theta[k] = if !c.is_variance() {
                0.0
            } else if c.a < q {
                0.5 * cov[(c.a, c.a)]
            } else {
                0.05
            };
        }
    }
    theta
}
