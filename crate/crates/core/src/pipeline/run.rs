use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{EstimatorConfig, EstimatorKind, PipelineConfig};
use super::json::{format_f64, to_canonical_string};
use super::{analysis_error, bn_error, data_error, discretize_error, sem_error, ErrorKind, PipelineError, Stage};
use crate::analysis::{
    classification_metrics, conditional_profile, contour_grid, info_gain_report, information_gain, predict,
    MetricsReport,
};
use crate::bn::{dag_from_sem, dag_from_sem_with_indicators, fit_bdeu, fit_em, fit_mle, BayesNet, Dag, EmOptions};
use crate::dataset::{load_csv, split, ObservedDataset, SplitAssignment, VariableKind};
use crate::discretize::{discretize_scores, fit_spec, DiscreteDataset, DiscretizationSpec, ThresholdScope, QUANTILE_METHOD};
use crate::sem::{factor_scores, fit_indices, fit_ml, parse_model_spec, FactorScoreMatrix, SemError, SemFit, SemModel};

/// Files written by [`run_pipeline`], in write order.
pub const ARTIFACTS: [&str; 11] = [
    "fit_indices.json",
    "loadings.csv",
    "scores.csv",
    "discretization.json",
    "net.json",
    "metrics_train.json",
    "metrics_validation.json",
    "info_gain.json",
    "contour_grid.json",
    "profiles.json",
    "manifest.json",
];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `output.dir`.
    pub out_dir: Option<PathBuf>,
    /// Replaces the split and EM seeds.
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch recorded as both manifest timestamps;
    /// the wall clock when absent.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows_ingested: usize,
    pub rows_complete: usize,
    pub train: usize,
    pub validation: usize,
    pub observed: usize,
    pub latents: usize,
    pub free_parameters: usize,
    pub degrees_of_freedom: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorMetrics {
    pub train: MetricsReport,
    pub validation: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub target: String,
    pub evidence: Vec<String>,
    pub ess: f64,
    pub em: EstimatorMetrics,
    pub bdeu: EstimatorMetrics,
}

struct Checked {
    config: PipelineConfig,
    model: SemModel,
}

struct Prepared {
    config: PipelineConfig,
    model: SemModel,
    data_sha256: String,
    rows_ingested: usize,
    complete: ObservedDataset,
    fit: SemFit,
    scores: FactorScoreMatrix,
    split: SplitAssignment,
    spec: DiscretizationSpec,
    discrete: DiscreteDataset,
    dag: Dag,
    train: DiscreteDataset,
    validation: DiscreteDataset,
    target: usize,
    evidence: Vec<usize>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn apply_options(mut config: PipelineConfig, opts: &RunOptions) -> PipelineConfig {
    if let Some(seed) = opts.seed {
        config.split.seed = seed;
        config.estimator.em_seed = seed;
    }
    config
}

fn node_names(config: &PipelineConfig, model: &SemModel) -> Vec<String> {
    let mut names = model.latents().to_vec();
    if config.estimator.include_indicators {
        names.extend(model.observed().iter().cloned());
    }
    names
}

fn check(config: PipelineConfig) -> Result<Checked, PipelineError> {
    let cfg = |m: String| PipelineError::config(m);
    let model = parse_model_spec(&config.model.spec).map_err(|e| sem_error(Stage::Config, e))?;
    let schema = config.schema();
    crate::dataset::validate_schema(&schema).map_err(|e| data_error(Stage::Config, e))?;
    for name in model.observed() {
        let Some(var) = schema.iter().find(|v| &v.name == name) else {
            return Err(cfg(format!("model variable `{name}` is not declared in [data]")));
        };
        if config.estimator.include_indicators && !matches!(var.kind, VariableKind::Ordinal { .. }) {
            return Err(cfg(format!("indicator `{name}` must be ordinal to enter the network")));
        }
    }
    if config.discretize.k_bins < 2 {
        return Err(cfg(format!("k_bins must be at least 2, got {}", config.discretize.k_bins)));
    }
    if !(config.split.fraction > 0.0 && config.split.fraction < 1.0) {
        return Err(cfg(format!("split fraction must lie in (0, 1), got {}", config.split.fraction)));
    }
    let est = &config.estimator;
    if !(est.ess > 0.0 && est.ess.is_finite()) {
        return Err(cfg(format!("ess must be positive, got {}", est.ess)));
    }
    if !(est.em_tol >= 0.0) || est.em_max_iter == 0 {
        return Err(cfg("em_tol must be non-negative and em_max_iter positive".to_string()));
    }
    let nodes = node_names(&config, &model);
    let known = |n: &String| -> Result<(), PipelineError> {
        if nodes.contains(n) {
            Ok(())
        } else {
            Err(cfg(format!("`{n}` is not a network node")))
        }
    };
    known(&config.prediction.target)?;
    if let Some(ev) = &config.prediction.evidence {
        for n in ev {
            known(n)?;
            if n == &config.prediction.target {
                return Err(cfg(format!("target `{n}` cannot also be evidence")));
            }
        }
    }
    if let Some(c) = &config.analysis.contour {
        known(&c.target)?;
        known(&c.axes[0])?;
        known(&c.axes[1])?;
        if c.target == c.axes[0] || c.target == c.axes[1] || c.axes[0] == c.axes[1] {
            return Err(cfg("contour target and axes must be three distinct nodes".to_string()));
        }
    }
    for n in config.analysis.profiles.iter().flatten() {
        known(n)?;
    }
    Ok(Checked { config, model })
}

/// Every node that is neither `target` nor one of its descendants.
pub fn default_evidence(dag: &Dag, target: usize) -> Vec<usize> {
    let desc = dag.descendants(target);
    (0..dag.len()).filter(|&v| v != target && !desc[v]).collect()
}

fn ingest(config: &PipelineConfig, model: &SemModel) -> Result<(ObservedDataset, ObservedDataset, String), PipelineError> {
    let path = config.data_path();
    let bytes = fs::read(&path).map_err(|e| {
        PipelineError::new(Stage::Ingest, ErrorKind::Data, format!("cannot read {}: {e}", path.display()))
    })?;
    let data = load_csv(&path, &config.schema(), config.data.id_column.as_deref())
        .map_err(|e| data_error(Stage::Ingest, e))?;
    let observed: Vec<&str> = model.observed().iter().map(String::as_str).collect();
    let complete = data.complete_cases(&observed);
    Ok((data, complete, sha256_hex(&bytes)))
}

fn indicator_columns(model: &SemModel, config: &PipelineConfig, complete: &ObservedDataset, discrete: &mut DiscreteDataset) {
    let schema = config.schema();
    for name in model.observed() {
        let var = schema.iter().find(|v| &v.name == name).expect("checked against schema");
        let VariableKind::Ordinal { levels, min } = var.kind else {
            unreachable!("checked ordinal");
        };
        let col = complete.column_index(name).expect("column present");
        for (row, src) in discrete.rows.iter_mut().zip(complete.rows()) {
            row.push(src[col].map(|v| (v as i64 - min + 1) as usize));
        }
        discrete.columns.push(name.clone());
        discrete.level_counts.push(levels as usize);
    }
}

fn prepare(config: PipelineConfig) -> Result<Prepared, PipelineError> {
    let Checked { config, model } = check(config)?;
    let (data, complete, data_sha256) = ingest(&config, &model)?;

    let fit = fit_ml(&model, &complete).map_err(|e| sem_error(Stage::SemFit, e))?;
    let scores = factor_scores(&fit, &complete).map_err(|e| sem_error(Stage::Scores, e))?;
    let split = split(&complete, config.split.fraction, config.split.seed).map_err(|e| data_error(Stage::Split, e))?;

    let scope = config.discretize.threshold_scope;
    let spec = fit_spec(&scores, config.discretize.k_bins, scope, |i| {
        scope == ThresholdScope::Full || split.train_ids.contains(&scores.case_ids[i])
    })
    .map_err(|e| discretize_error(Stage::Discretize, e))?;
    let mut discrete = discretize_scores(&scores, &spec).map_err(|e| discretize_error(Stage::Discretize, e))?;
    if config.estimator.include_indicators {
        indicator_columns(&model, &config, &complete, &mut discrete);
    }

    let levels = |name: &str| {
        discrete
            .column_index(name)
            .map_or(0, |c| discrete.level_counts[c])
    };
    let dag = if config.estimator.include_indicators {
        dag_from_sem_with_indicators(&model, &levels)
    } else {
        dag_from_sem(&model, &levels)
    }
    .map_err(|e| bn_error(Stage::Network, e))?;

    let train = discrete.filter_rows(|i| split.train_ids.contains(&discrete.case_ids[i]));
    let validation = discrete.filter_rows(|i| split.validation_ids.contains(&discrete.case_ids[i]));
    let target = dag.index(&config.prediction.target).map_err(|e| bn_error(Stage::Network, e))?;
    let evidence = match &config.prediction.evidence {
        Some(names) => names
            .iter()
            .map(|n| dag.index(n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bn_error(Stage::Network, e))?,
        None => default_evidence(&dag, target),
    };
    Ok(Prepared {
        config,
        model,
        data_sha256,
        rows_ingested: data.n_cases(),
        complete,
        fit,
        scores,
        split,
        spec,
        discrete,
        dag,
        train,
        validation,
        target,
        evidence,
    })
}

fn em_options(est: &EstimatorConfig) -> EmOptions {
    EmOptions {
        tol: est.em_tol,
        max_iter: est.em_max_iter,
        seed: est.em_seed,
        prior_weight: 0.0,
    }
}

/// Fits CPTs with the chosen estimator; returns the net and bookkeeping.
fn estimate(kind: EstimatorKind, est: &EstimatorConfig, dag: &Dag, data: &DiscreteDataset) -> Result<(BayesNet, Value), PipelineError> {
    let err = |e| bn_error(Stage::Estimate, e);
    Ok(match kind {
        EstimatorKind::Mle | EstimatorKind::Bdeu => {
            let e = if kind == EstimatorKind::Mle {
                fit_mle(dag, data).map_err(err)?
            } else {
                fit_bdeu(dag, data, est.ess).map_err(err)?
            };
            let unseen: Vec<Value> = e.unseen_configs.iter().map(|(n, j)| json!({"node": n, "config": j})).collect();
            let info = json!({"rows_used": e.rows_used, "rows_dropped": e.rows_dropped, "unseen_configs": unseen});
            (e.net, info)
        }
        EstimatorKind::Em => {
            let out = fit_em(dag, data, em_options(est)).map_err(err)?;
            let info = json!({
                "rows_used": out.rows_used,
                "iterations": out.iterations,
                "converged": out.converged,
                "final_log_likelihood": out.log_likelihoods.last().copied(),
            });
            (out.net, info)
        }
    })
}

fn evaluate(net: &BayesNet, target: usize, evidence: &[usize], data: &DiscreteDataset) -> Result<(MetricsReport, usize), PipelineError> {
    let pred = predict(net, target, data, evidence).map_err(|e| analysis_error(Stage::Metrics, e))?;
    let col = data
        .column_index(net.dag().name(target))
        .expect("target column present");
    let truth: Vec<Option<usize>> = data.rows.iter().map(|r| r[col]).collect();
    let report = classification_metrics(&pred.predicted, &truth, net.dag().levels(target))
        .map_err(|e| analysis_error(Stage::Metrics, e))?;
    Ok((report, pred.skipped))
}

fn names(dag: &Dag, nodes: &[usize]) -> Vec<String> {
    nodes.iter().map(|&v| dag.name(v).to_string()).collect()
}

fn canonical<T: Serialize>(value: &T) -> String {
    to_canonical_string(value).expect("artifact serializes")
}

fn metrics_artifact(p: &Prepared, estimator: EstimatorKind, split: &str, report: &MetricsReport, skipped: usize) -> String {
    canonical(&json!({
        "split": split,
        "estimator": estimator.as_str(),
        "target": p.dag.name(p.target),
        "evidence": names(&p.dag, &p.evidence),
        "n_skipped": skipped,
        "metrics": report,
    }))
}

fn fit_artifact(p: &Prepared) -> Result<String, PipelineError> {
    let fit = &p.fit;
    let (rmsea, cfi, srmr) = match fit_indices(fit) {
        Ok(ix) => (Some(ix.rmsea), ix.cfi, ix.srmr),
        Err(SemError::ZeroDf) => (
            None,
            crate::sem::cfi(fit.chi_square, fit.df, fit.baseline_chi_square, fit.baseline_df),
            crate::sem::srmr(&fit.sample.cov, &fit.implied_cov),
        ),
        Err(e) => return Err(sem_error(Stage::SemFit, e)),
    };
    let warnings: Vec<Value> = fit
        .warnings
        .iter()
        .map(|w| json!({"label": w.label, "value": w.value, "reason": w.reason}))
        .collect();
    Ok(canonical(&json!({
        "rmsea": rmsea,
        "cfi": cfi,
        "srmr": srmr,
        "chi_square": fit.chi_square,
        "df": fit.df,
        "baseline_chi_square": fit.baseline_chi_square,
        "baseline_df": fit.baseline_df,
        "n": fit.n,
        "discrepancy": fit.discrepancy,
        "iterations": fit.iterations,
        "gradient_max": fit.gradient_max,
        "loading_summary": fit.loading_summary(),
        "warnings": warnings,
    })))
}

fn loadings_csv(fit: &SemFit) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "op", "lhs", "rhs", "free", "estimate", "std_estimate"])
        .expect("in-memory write");
    for p in fit.parameter_table() {
        w.write_record([
            p.label.as_str(),
            p.op,
            p.lhs.as_str(),
            p.rhs.as_str(),
            if p.free { "true" } else { "false" },
            &format_f64(p.value),
            &format_f64(p.std_value),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn scores_csv(scores: &FactorScoreMatrix, id_column: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once(id_column)
        .chain(scores.latents.iter().map(String::as_str))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for (id, row) in scores.case_ids.iter().zip(&scores.values) {
        let cells: Vec<String> = std::iter::once(id.clone())
            .chain(row.iter().map(|v| v.map_or_else(|| "NA".to_string(), format_f64)))
            .collect();
        w.write_record(&cells).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn discretization_artifact(p: &Prepared) -> String {
    let mut counts = BTreeMap::new();
    for (c, name) in p.discrete.columns.iter().enumerate().take(p.scores.latents.len()) {
        let mut per_level = vec![0usize; p.discrete.level_counts[c]];
        for row in &p.discrete.rows {
            if let Some(l) = row[c] {
                per_level[l - 1] += 1;
            }
        }
        counts.insert(name.clone(), per_level);
    }
    canonical(&json!({
        "k": p.spec.k,
        "scope": p.spec.scope,
        "quantile_method": p.spec.quantile_method,
        "variables": p.spec.variables,
        "level_counts": counts,
    }))
}

fn info_gain_artifact(p: &Prepared, net: &BayesNet) -> Result<String, PipelineError> {
    let base = p.config.analysis.log_base;
    let err = |e| analysis_error(Stage::Analytics, e);
    let report = info_gain_report(net, p.target, base).map_err(err)?;
    let mut edges = Vec::new();
    for (parent, child) in p.dag.edges() {
        let w = information_gain(net, child, parent, base).map_err(err)?;
        edges.push(json!({"source": p.dag.name(child), "target": p.dag.name(parent), "weight": w}));
    }
    Ok(canonical(&json!({
        "log_base": base,
        "target": report.target,
        "to_target": report.entries,
        "edges": edges,
    })))
}

fn contour_artifact(p: &Prepared, net: &BayesNet) -> Result<Value, PipelineError> {
    let (target, a, b) = match &p.config.analysis.contour {
        Some(c) => (c.target.clone(), c.axes[0].clone(), c.axes[1].clone()),
        None => {
            let ps = p.dag.parents(p.target);
            if ps.len() != 2 {
                return Ok(json!({"grid": null, "reason": "target does not have exactly two parents and no [analysis.contour] was given"}));
            }
            (p.dag.name(p.target).to_string(), p.dag.name(ps[0]).to_string(), p.dag.name(ps[1]).to_string())
        }
    };
    let idx = |n: &str| p.dag.index(n).map_err(|e| bn_error(Stage::Analytics, e));
    let (t, ia, ib) = (idx(&target)?, idx(&a)?, idx(&b)?);
    let grid = contour_grid(net, t, ia, ib).map_err(|e| analysis_error(Stage::Analytics, e))?;
    Ok(json!({
        "grid": {
            "target": grid.target,
            "axes": [grid.axes.0, grid.axes.1],
            "levels": {"target": p.dag.levels(t), "x": p.dag.levels(ia), "y": p.dag.levels(ib)},
            "values": grid.values,
        }
    }))
}

fn profiles_artifact(p: &Prepared, net: &BayesNet) -> Result<String, PipelineError> {
    let given: Vec<usize> = match &p.config.analysis.profiles {
        Some(names) => names
            .iter()
            .map(|n| p.dag.index(n))
            .collect::<Result<_, _>>()
            .map_err(|e| bn_error(Stage::Analytics, e))?,
        None => (0..p.dag.len()).filter(|&v| !p.dag.children(v).is_empty()).collect(),
    };
    let mut out = Vec::new();
    for g in given {
        for s in 0..p.dag.levels(g) {
            let prof = conditional_profile(net, g, s).map_err(|e| analysis_error(Stage::Analytics, e))?;
            out.push(json!({"given": prof.given, "level": s + 1, "children": prof.children}));
        }
    }
    Ok(canonical(&json!({"profiles": out})))
}

fn rfc3339(epoch: u64) -> String {
    humantime::format_rfc3339_seconds(UNIX_EPOCH + Duration::from_secs(epoch)).to_string()
}

fn now_epoch() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn decided_defaults() -> Value {
    json!({
        "quantile_method": QUANTILE_METHOD,
        "level_assignment": "level = 1 + number of thresholds strictly below the score; ties with a threshold go to the lower level",
        "duplicate_thresholds": "merged; the variable keeps fewer levels",
        "split_rounding": "train size = fraction * n rounded half to even",
        "split_sampling": "simple random, not stratified; ChaCha8 seeded with seed_from_u64, descending Fisher-Yates with multiply-shift bounded draws",
        "missing_data": "listwise deletion on the model's observed variables",
        "sem_estimator": "maximum likelihood on the n-1 sample covariance; chi-square = (n-1) F; variances optimized on the log scale",
        "srmr": "standardized residuals (s_ij - sigma_ij) / sqrt(s_ii s_jj) over the lower triangle with diagonal",
        "factor_scores": "regression method, centered at the sample mean",
        "elimination_order": "greedy min-fill, ties broken by node name; barren nodes pruned",
        "prediction": "posterior argmax, ties to the lowest level; cases with zero-probability evidence are skipped",
        "evidence_default": "every node that is neither the target nor a descendant of it",
        "mle_unseen_parent_configurations": "uniform rows, reported",
        "bdeu_alpha": "ess / (levels * parent configurations)",
        "em_start": "uniform rows plus U(0, 0.01) noise per entry, renormalized, seeded",
        "metric_averaging": "macro over classes present; micro reported alongside",
        "float_format": "17 significant digits",
    })
}

/// Writes every artifact or none: on failure the files already written are
/// removed again.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, PipelineError> {
    let fail = |m: String| PipelineError::new(Stage::Output, ErrorKind::Data, m);
    fs::create_dir_all(dir).map_err(|e| fail(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(fail(format!("cannot write {}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}

fn config_value(config: &PipelineConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

/// Runs every stage and writes the artifacts listed in [`ARTIFACTS`].
pub fn run_pipeline(config: PipelineConfig, opts: &RunOptions) -> Result<RunSummary, PipelineError> {
    let started = opts.timestamp.unwrap_or_else(now_epoch);
    let config = apply_options(config, opts);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| config.output_dir());
    let p = prepare(config)?;
    let kind = p.config.estimator.method;
    let est = &p.config.estimator;

    let (train_net, train_info) = estimate(kind, est, &p.dag, &p.train)?;
    let (train_metrics, train_skipped) = evaluate(&train_net, p.target, &p.evidence, &p.train)?;
    let (val_metrics, val_skipped) = evaluate(&train_net, p.target, &p.evidence, &p.validation)?;
    let (net, full_info) = estimate(kind, est, &p.dag, &p.discrete)?;

    let mut files: Vec<(&str, String)> = vec![
        ("fit_indices.json", fit_artifact(&p)?),
        ("loadings.csv", loadings_csv(&p.fit)),
        (
            "scores.csv",
            scores_csv(&p.scores, p.config.data.id_column.as_deref().unwrap_or("id")),
        ),
        ("discretization.json", discretization_artifact(&p)),
        ("net.json", canonical(&net.to_json())),
        ("metrics_train.json", metrics_artifact(&p, kind, "train", &train_metrics, train_skipped)),
        (
            "metrics_validation.json",
            metrics_artifact(&p, kind, "validation", &val_metrics, val_skipped),
        ),
        ("info_gain.json", info_gain_artifact(&p, &net)?),
        ("contour_grid.json", canonical(&contour_artifact(&p, &net)?)),
        ("profiles.json", profiles_artifact(&p, &net)?),
    ];
    let hashes: BTreeMap<&str, String> = files.iter().map(|(n, c)| (*n, sha256_hex(c.as_bytes()))).collect();
    let config_json = config_value(&p.config);
    let finished = opts.timestamp.unwrap_or_else(now_epoch);
    let manifest = json!({
        "software": {"name": "sembn", "version": env!("CARGO_PKG_VERSION")},
        "config": config_json,
        "config_sha256": sha256_hex(canonical(&config_json).as_bytes()),
        "base_dir": p.config.base_dir,
        "data": {"path": p.config.data_path(), "sha256": p.data_sha256},
        "timestamps": {"started": rfc3339(started), "finished": rfc3339(finished)},
        "defaults": decided_defaults(),
        "row_counts": {
            "ingested": p.rows_ingested,
            "complete": p.complete.n_cases(),
            "scored": p.scores.values.iter().filter(|r| r.iter().all(Option::is_some)).count(),
            "train": p.split.train_ids.len(),
            "validation": p.split.validation_ids.len(),
        },
        "sem": {"iterations": p.fit.iterations, "free_parameters": p.model.n_free(), "df": p.fit.df},
        "estimation": {"method": kind.as_str(), "train": train_info, "full": full_info},
        "network": {"nodes": p.dag.names(), "target": p.dag.name(p.target), "evidence": names(&p.dag, &p.evidence)},
        "artifacts": hashes,
    });
    files.push(("manifest.json", canonical(&manifest)));
    let written = write_all(&out_dir, &files)?;
    Ok(RunSummary {
        out_dir,
        files: written,
        manifest,
    })
}

/// Fits EM and BDeu on `train` and scores both on `train` and `validation`.
#[allow(clippy::too_many_arguments)]
pub fn compare_on(
    dag: &Dag,
    train: &DiscreteDataset,
    validation: &DiscreteDataset,
    target: usize,
    evidence: &[usize],
    ess: f64,
    em: EmOptions,
) -> Result<Comparison, PipelineError> {
    let est = EstimatorConfig {
        method: EstimatorKind::Em,
        ess,
        em_tol: em.tol,
        em_max_iter: em.max_iter,
        em_seed: em.seed,
        include_indicators: false,
    };
    let mut rows = Vec::new();
    for kind in [EstimatorKind::Em, EstimatorKind::Bdeu] {
        let (net, _) = estimate(kind, &est, dag, train)?;
        let (tr, _) = evaluate(&net, target, evidence, train)?;
        let (va, _) = evaluate(&net, target, evidence, validation)?;
        rows.push(EstimatorMetrics {
            train: tr,
            validation: va,
        });
    }
    let bdeu = rows.pop().expect("two rows");
    let em = rows.pop().expect("two rows");
    Ok(Comparison {
        target: dag.name(target).to_string(),
        evidence: names(dag, evidence),
        ess,
        em,
        bdeu,
    })
}

/// Runs the pipeline up to the train split, then writes `comparison.json`
/// with EM and BDeu metrics side by side.
pub fn compare_estimators(config: PipelineConfig, opts: &RunOptions) -> Result<(Comparison, PathBuf), PipelineError> {
    let config = apply_options(config, opts);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| config.output_dir());
    let p = prepare(config)?;
    let comparison = compare_on(
        &p.dag,
        &p.train,
        &p.validation,
        p.target,
        &p.evidence,
        p.config.estimator.ess,
        em_options(&p.config.estimator),
    )?;
    let files = [("comparison.json", canonical(&comparison))];
    let written = write_all(&out_dir, &files)?;
    Ok((comparison, written.into_iter().next().expect("one file")))
}

/// Checks the config and data without fitting anything.
pub fn validate(config: PipelineConfig, opts: &RunOptions) -> Result<ValidationReport, PipelineError> {
    let Checked { config, model } = check(apply_options(config, opts))?;
    let (data, complete, _) = ingest(&config, &model)?;
    let df = model.degrees_of_freedom();
    if df < 0 {
        return Err(sem_error(Stage::Config, SemError::NegativeDf(df)));
    }
    if complete.n_cases() <= model.q() {
        return Err(sem_error(
            Stage::Ingest,
            SemError::InsufficientData {
                n: complete.n_cases(),
                q: model.q(),
            },
        ));
    }
    let s = split(&complete, config.split.fraction, config.split.seed).map_err(|e| data_error(Stage::Split, e))?;
    let ids: BTreeSet<&String> = s.train_ids.iter().chain(&s.validation_ids).collect();
    debug_assert_eq!(ids.len(), complete.n_cases());
    Ok(ValidationReport {
        rows_ingested: data.n_cases(),
        rows_complete: complete.n_cases(),
        train: s.train_ids.len(),
        validation: s.validation_ids.len(),
        observed: model.q(),
        latents: model.latents().len(),
        free_parameters: model.n_free(),
        degrees_of_freedom: df,
    })
}

impl PipelineConfig {
    /// Rebuilds the config recorded in a run manifest.
    pub fn from_manifest(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::config(format!("cannot read {}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| PipelineError::config(e.to_string()))?;
        let mut config: PipelineConfig = serde_json::from_value(doc.get("config").cloned().unwrap_or(Value::Null))
            .map_err(|e| PipelineError::config(format!("manifest config: {e}")))?;
        config.base_dir = doc
            .get("base_dir")
            .and_then(Value::as_str)
            .map(PathBuf::from)
            .unwrap_or_default();
        Ok(config)
    }
}
