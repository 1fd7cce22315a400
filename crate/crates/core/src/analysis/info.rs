use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::bn::{joint_posterior, posterior, BayesNet, Evidence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LogBase {
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
            LogBase::Ten => x.log10(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
            LogBase::Ten => "10",
        }
    }
}

/// `-sum p log p` with `0 log 0 = 0`.
pub fn entropy(dist: &[f64], base: LogBase) -> Result<f64, AnalysisError> {
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || dist.iter().any(|p| !(*p >= 0.0)) {
        return Err(AnalysisError::InvalidDistribution { sum });
    }
    Ok(dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * base.log(p))
        .sum::<f64>()
        .max(0.0))
}

fn pair_joint(net: &BayesNet, x: usize, y: usize) -> Result<(Vec<Vec<f64>>, usize, usize), AnalysisError> {
    if x == y {
        return Err(AnalysisError::SameNode);
    }
    let (joint, _) = joint_posterior(net, &[x, y], &Evidence::new())?;
    let (rx, ry) = (net.dag().levels(x), net.dag().levels(y));
    // joint is laid out x-major
    let table = (0..rx)
        .map(|i| joint.values()[i * ry..(i + 1) * ry].to_vec())
        .collect();
    Ok((table, rx, ry))
}

/// `H(X | Y) = sum_y P(y) H(X | Y = y)` from the exact pairwise joint.
pub fn conditional_entropy(net: &BayesNet, x: usize, y: usize, base: LogBase) -> Result<f64, AnalysisError> {
    let (table, rx, ry) = pair_joint(net, x, y)?;
    let mut h = 0.0;
    for j in 0..ry {
        let py: f64 = (0..rx).map(|i| table[i][j]).sum();
        if py <= 0.0 {
            continue;
        }
        let cond: Vec<f64> = (0..rx).map(|i| table[i][j] / py).collect();
        let s: f64 = cond.iter().sum();
        let cond: Vec<f64> = cond.iter().map(|p| p / s).collect();
        h += py * entropy(&cond, base)?;
    }
    Ok(h)
}

/// `IG(X; Y) = H(X) - H(X | Y)`.
pub fn information_gain(net: &BayesNet, x: usize, y: usize, base: LogBase) -> Result<f64, AnalysisError> {
    let hx = entropy(&posterior(net, x, &Evidence::new())?.probs, base)?;
    Ok(hx - conditional_entropy(net, x, y, base)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoGainEntry {
    pub source: String,
    pub entropy: f64,
    pub conditional_entropy: f64,
    pub information_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoGainReport {
    pub target: String,
    pub log_base: LogBase,
    /// Sorted by information gain, largest first; ties by source name.
    pub entries: Vec<InfoGainEntry>,
}

impl InfoGainReport {
    pub fn gain(&self, source: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.source == source)
            .map(|e| e.information_gain)
    }
}

/// Information gain about `target` from every other node.
pub fn info_gain_report(net: &BayesNet, target: usize, base: LogBase) -> Result<InfoGainReport, AnalysisError> {
    let dag = net.dag();
    let h = entropy(&posterior(net, target, &Evidence::new())?.probs, base)?;
    let mut entries = Vec::new();
    for source in (0..dag.len()).filter(|&v| v != target) {
        let hc = conditional_entropy(net, target, source, base)?;
        entries.push(InfoGainEntry {
            source: dag.name(source).to_string(),
            entropy: h,
            conditional_entropy: hc,
            information_gain: h - hc,
        });
    }
    entries.sort_by(|a, b| {
        b.information_gain
            .total_cmp(&a.information_gain)
            .then_with(|| a.source.cmp(&b.source))
    });
    Ok(InfoGainReport {
        target: dag.name(target).to_string(),
        log_base: base,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let h = entropy(&[0.2; 5], LogBase::Two).unwrap();
        assert!((h - 5f64.log2()).abs() < 1e-12);
        assert_eq!(entropy(&[1.0, 0.0, 0.0], LogBase::Two).unwrap(), 0.0);
        assert_eq!(entropy(&[0.5, 0.25, 0.25], LogBase::Two).unwrap(), 1.5);
        assert!((entropy(&[0.5, 0.5], LogBase::E).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((entropy(&[0.1; 10], LogBase::Ten).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_distribution() {
        assert!(matches!(entropy(&[0.5, 0.6], LogBase::Two), Err(AnalysisError::InvalidDistribution { .. })));
        assert!(entropy(&[1.5, -0.5], LogBase::Two).is_err());
    }
}
