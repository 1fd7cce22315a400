use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::SemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeKind {
    /// `latent =~ indicator`, stored in the generative direction latent -> indicator.
    Loading,
    /// `outcome ~ predictor`, stored as predictor -> outcome.
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpec {
    /// Index into the model's free-parameter list.
    Free(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub param: ParamSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTerm {
    pub a: usize,
    pub b: usize,
    pub param: ParamSpec,
}

impl CovarianceTerm {
    pub fn is_variance(&self) -> bool {
        self.a == self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeParameter {
    pub label: String,
    /// Variances are optimized on the log scale.
    pub is_variance: bool,
}

/// Declarative latent-variable model in RAM form.
///
/// Variable indices run over observed variables first (`0..q`) and then
/// latents (`q..q + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    observed: Vec<String>,
    latents: Vec<String>,
    pub(crate) directed: Vec<DirectedEdge>,
    pub(crate) covariances: Vec<CovarianceTerm>,
    pub(crate) free: Vec<FreeParameter>,
}

/// Parameter specification as written by a user, before index resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Modifier {
    None,
    Fixed(f64),
    Label(String),
    /// `NA*x`: force the parameter free.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawDirected {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
    pub modifier: Modifier,
    pub first_of_block: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawCovariance {
    pub a: String,
    pub b: String,
    pub modifier: Modifier,
}

impl SemModel {
    /// Resolves raw statements into a validated model, adding the default
    /// parameters: marker loadings fixed to 1, a free (residual) variance for
    /// every variable, and free covariances among exogenous latents.
    pub(crate) fn build(
        latents: Vec<String>,
        mut observed: Vec<String>,
        directed: Vec<RawDirected>,
        covariances: Vec<RawCovariance>,
    ) -> Result<Self, SemError> {
        observed.retain(|o| !latents.contains(o));
        let names: Vec<String> = observed.iter().chain(&latents).cloned().collect();
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        let mut free: Vec<FreeParameter> = Vec::new();
        let mut by_label: HashMap<String, usize> = HashMap::new();
        let mut resolve = |modifier: &Modifier,
                           default_label: String,
                           default_fixed: Option<f64>,
                           is_variance: bool|
         -> ParamSpec {
            let label = match modifier {
                Modifier::Fixed(v) => return ParamSpec::Fixed(*v),
                Modifier::Label(l) => l.clone(),
                Modifier::Free => default_label,
                Modifier::None => match default_fixed {
                    Some(v) => return ParamSpec::Fixed(v),
                    None => default_label,
                },
            };
            if let Some(&i) = by_label.get(&label) {
                return ParamSpec::Free(i);
            }
            free.push(FreeParameter {
                label: label.clone(),
                is_variance,
            });
            by_label.insert(label, free.len() - 1);
            ParamSpec::Free(free.len() - 1)
        };

        let mut edges = Vec::new();
        let mut seen_edges: HashMap<(usize, usize), ()> = HashMap::new();
        for raw in &directed {
            let from = index[raw.from.as_str()];
            let to = index[raw.to.as_str()];
            if seen_edges.insert((from, to), ()).is_some() {
                return Err(SemError::DuplicateStatement(format!(
                    "{} -> {}",
                    raw.from, raw.to
                )));
            }
            let (label, fixed) = match raw.kind {
                EdgeKind::Loading => (
                    format!("{}=~{}", raw.from, raw.to),
                    raw.first_of_block.then_some(1.0),
                ),
                EdgeKind::Regression => (format!("{}~{}", raw.to, raw.from), None),
            };
            let modifier = match (&raw.modifier, fixed) {
                // A label on the marker indicator keeps it fixed.
                (Modifier::Label(_), Some(_)) => &Modifier::None,
                (m, _) => m,
            };
            edges.push(DirectedEdge {
                from,
                to,
                kind: raw.kind,
                param: resolve(modifier, label, fixed, false),
            });
        }

        check_acyclic(&names, &edges)?;

        let mut has_parent = vec![false; names.len()];
        for e in &edges {
            has_parent[e.to] = true;
        }

        let mut covs = Vec::new();
        let mut seen_cov: HashMap<(usize, usize), ()> = HashMap::new();
        for raw in &covariances {
            let (a, b) = (index[raw.a.as_str()], index[raw.b.as_str()]);
            let key = (a.min(b), a.max(b));
            if seen_cov.insert(key, ()).is_some() {
                return Err(SemError::DuplicateStatement(format!("{} ~~ {}", raw.a, raw.b)));
            }
            covs.push(CovarianceTerm {
                a: key.0,
                b: key.1,
                param: resolve(
                    &raw.modifier,
                    format!("{}~~{}", names[key.0], names[key.1]),
                    None,
                    a == b,
                ),
            });
        }
        for v in 0..names.len() {
            if seen_cov.insert((v, v), ()).is_none() {
                covs.push(CovarianceTerm {
                    a: v,
                    b: v,
                    param: resolve(&Modifier::None, format!("{0}~~{0}", names[v]), None, true),
                });
            }
        }
        let q = observed.len();
        let exogenous_latents: Vec<usize> = (q..names.len()).filter(|&v| !has_parent[v]).collect();
        for (i, &a) in exogenous_latents.iter().enumerate() {
            for &b in &exogenous_latents[i + 1..] {
                if seen_cov.insert((a, b), ()).is_none() {
                    covs.push(CovarianceTerm {
                        a,
                        b,
                        param: resolve(
                            &Modifier::None,
                            format!("{}~~{}", names[a], names[b]),
                            None,
                            false,
                        ),
                    });
                }
            }
        }

        let model = SemModel {
            observed,
            latents,
            directed: edges,
            covariances: covs,
            free,
        };
        model.check_indicators()?;
        Ok(model)
    }

    /// Every latent must reach at least one observed variable through its
    /// outgoing directed paths.
    fn check_indicators(&self) -> Result<(), SemError> {
        let q = self.q();
        for (l, name) in self.latents.iter().enumerate() {
            let start = q + l;
            let mut stack = vec![start];
            let mut seen = vec![false; self.n_vars()];
            let mut reaches = false;
            while let Some(v) = stack.pop() {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                for e in self.directed.iter().filter(|e| e.from == v) {
                    if e.to < q {
                        reaches = true;
                    } else {
                        stack.push(e.to);
                    }
                }
            }
            if !reaches {
                return Err(SemError::UnderidentifiedLatent(name.clone()));
            }
        }
        Ok(())
    }

    pub fn observed(&self) -> &[String] {
        &self.observed
    }

    pub fn latents(&self) -> &[String] {
        &self.latents
    }

    /// Observed names followed by latent names.
    pub fn variable_names(&self) -> Vec<&str> {
        self.observed
            .iter()
            .chain(&self.latents)
            .map(String::as_str)
            .collect()
    }

    pub fn name(&self, index: usize) -> &str {
        if index < self.q() {
            &self.observed[index]
        } else {
            &self.latents[index - self.q()]
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.observed
            .iter()
            .chain(&self.latents)
            .position(|n| n == name)
    }

    pub fn q(&self) -> usize {
        self.observed.len()
    }

    pub fn n_vars(&self) -> usize {
        self.observed.len() + self.latents.len()
    }

    pub fn directed_edges(&self) -> &[DirectedEdge] {
        &self.directed
    }

    pub fn covariance_terms(&self) -> &[CovarianceTerm] {
        &self.covariances
    }

    pub fn free_parameters(&self) -> &[FreeParameter] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// `q(q+1)/2` minus the number of free parameters; negative when the
    /// model has more parameters than moments.
    pub fn degrees_of_freedom(&self) -> i64 {
        let q = self.q() as i64;
        q * (q + 1) / 2 - self.n_free() as i64
    }

    pub fn is_latent(&self, index: usize) -> bool {
        index >= self.q()
    }

    /// Directed edges whose endpoints are both latent, as name pairs.
    pub fn latent_edges(&self) -> Vec<(&str, &str)> {
        self.directed
            .iter()
            .filter(|e| self.is_latent(e.from) && self.is_latent(e.to))
            .map(|e| (self.name(e.from), self.name(e.to)))
            .collect()
    }

    /// Indicators (observed or latent) of each latent, in declaration order.
    pub fn indicators(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in self.directed.iter().filter(|e| e.kind == EdgeKind::Loading) {
            out.entry(self.name(e.from)).or_default().push(self.name(e.to));
        }
        out
    }

    /// Parameter label for a spec; fixed values have no label.
    pub fn label(&self, spec: ParamSpec) -> Option<&str> {
        match spec {
            ParamSpec::Free(i) => Some(&self.free[i].label),
            ParamSpec::Fixed(_) => None,
        }
    }

    pub fn value(spec: ParamSpec, theta: &[f64]) -> f64 {
        match spec {
            ParamSpec::Free(i) => theta[i],
            ParamSpec::Fixed(v) => v,
        }
    }
}

fn check_acyclic(names: &[String], edges: &[DirectedEdge]) -> Result<(), SemError> {
    let n = names.len();
    let mut indegree = vec![0usize; n];
    for e in edges {
        indegree[e.to] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = ready.pop() {
        visited += 1;
        for e in edges.iter().filter(|e| e.from == v) {
            indegree[e.to] -= 1;
            if indegree[e.to] == 0 {
                ready.push(e.to);
            }
        }
    }
    if visited < n {
        let stuck: Vec<&str> = (0..n)
            .filter(|&v| indegree[v] > 0)
            .map(|v| names[v].as_str())
            .collect();
        return Err(SemError::Cycle(stuck.join(", ")));
    }
    Ok(())
}
