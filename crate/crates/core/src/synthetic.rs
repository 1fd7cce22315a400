//! Simulated questionnaire data with the shape of the youth-development case
//! study: three first-order constructs, a hierarchy of sub-constructs and
//! 5-point Likert items with listwise missingness.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{ObservedDataset, VariableSchema};
use crate::pipeline::PipelineConfig;

/// Rows and complete cases of the case-study sample.
pub const CASE_STUDY_ROWS: usize = 1507;
pub const CASE_STUDY_COMPLETE: usize = 1015;

/// Standardized loadings of each latent on its latent children.
pub const HIERARCHY: &[(&str, &[(&str, f64)])] = &[
    ("PP", &[("AfC", 0.85), ("Aut", 0.70), ("Hum", 0.80), ("Dis", 0.75)]),
    ("CFS", &[("Pee", 0.65), ("Bon", 0.85), ("Pro", 0.70), ("Cla", 0.80)]),
    ("Bon", &[("Bel", 0.90), ("Sup", 0.80)]),
    ("Cla", &[("Rul", 0.80), ("Val", 0.80)]),
    (
        "PYD",
        &[
            ("Opt", 0.70),
            ("Pes", -0.60),
            ("GSe", 0.65),
            ("Age", 0.55),
            ("Com", 0.55),
            ("Man", 0.50),
            ("Mea", 0.45),
        ],
    ),
];

/// Standardized item loadings of each construct measured directly.
pub const ITEMS: &[(&str, &[f64])] = &[
    ("AfC", &[0.80, 0.75, 0.70, 0.78]),
    ("Aut", &[0.72, 0.65, 0.70, 0.60]),
    ("Hum", &[0.80, 0.74, 0.78]),
    ("Dis", &[0.70, 0.82, 0.76]),
    ("Pee", &[0.70, 0.65, 0.72, 0.68]),
    ("Bel", &[0.85, 0.88, 0.86]),
    ("Sup", &[0.75, 0.80, 0.78]),
    ("Pro", &[0.75, 0.78, 0.72, 0.80]),
    ("Rul", &[0.72, 0.80, 0.76]),
    ("Val", &[0.74, 0.80, 0.70]),
    ("Opt", &[0.60, 0.70, 0.55]),
    ("Pes", &[0.65, 0.62, 0.68]),
    ("GSe", &[0.60, 0.66, 0.58]),
    ("Age", &[0.55, 0.52, 0.60]),
    ("Com", &[0.50, 0.54, 0.48]),
    ("Man", &[0.45, 0.52, 0.50]),
    ("Mea", &[0.50, 0.42, 0.56]),
];

/// `PYD ~ PP + CFS` coefficients and the `PP`-`CFS` correlation.
pub const PYD_ON_PP: f64 = 0.5;
pub const PYD_ON_CFS: f64 = 0.3;
pub const PP_CFS_CORRELATION: f64 = 0.5;

/// Cut points turning a standard-normal item response into levels 1..=5.
pub const LIKERT_CUTS: [f64; 4] = [-1.3, -0.45, 0.35, 1.2];

pub fn item_names(construct: &str) -> Vec<String> {
    let count = ITEMS
        .iter()
        .find(|(c, _)| *c == construct)
        .map_or(0, |(_, l)| l.len());
    (1..=count)
        .map(|i| format!("{}{}", construct.to_lowercase(), i))
        .collect()
}

/// Observed item names in column order.
pub fn all_item_names() -> Vec<String> {
    ITEMS.iter().flat_map(|(c, _)| item_names(c)).collect()
}

/// Model specification matching the generating structure.
pub fn model_spec() -> String {
    let mut lines = Vec::new();
    for (parent, children) in HIERARCHY {
        let rhs: Vec<&str> = children.iter().map(|(c, _)| *c).collect();
        lines.push(format!("{parent} =~ {}", rhs.join(" + ")));
    }
    for (construct, _) in ITEMS {
        lines.push(format!("{construct} =~ {}", item_names(construct).join(" + ")));
    }
    lines.push("PYD ~ PP + CFS".to_string());
    lines.join("\n") + "\n"
}

pub fn schema() -> Vec<VariableSchema> {
    all_item_names()
        .into_iter()
        .map(|n| VariableSchema::ordinal(n, 5))
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn likert(value: f64) -> f64 {
    (1 + LIKERT_CUTS.iter().filter(|&&c| c < value).count()) as f64
}

/// Draws one case: standardized latent values by name, then item levels.
fn draw_case(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut latent: Vec<(&str, f64)> = Vec::new();
    let pp = normal(rng);
    let r = PP_CFS_CORRELATION;
    let cfs = r * pp + (1.0 - r * r).sqrt() * normal(rng);
    let explained = PYD_ON_PP.powi(2) + PYD_ON_CFS.powi(2) + 2.0 * PYD_ON_PP * PYD_ON_CFS * r;
    let pyd = PYD_ON_PP * pp + PYD_ON_CFS * cfs + (1.0 - explained).sqrt() * normal(rng);
    latent.extend([("PP", pp), ("CFS", cfs), ("PYD", pyd)]);
    // HIERARCHY lists parents before their latent children
    for (parent, children) in HIERARCHY {
        let value = latent.iter().find(|(n, _)| n == parent).expect("parent drawn").1;
        for &(child, lambda) in children.iter() {
            let v = lambda * value + (1.0 - lambda * lambda).sqrt() * normal(rng);
            latent.push((child, v));
        }
    }
    let mut items = Vec::new();
    for (construct, loadings) in ITEMS {
        let f = latent.iter().find(|(n, _)| n == construct).expect("construct drawn").1;
        for &lambda in loadings.iter() {
            items.push(likert(lambda * f + (1.0 - lambda * lambda).sqrt() * normal(rng)));
        }
    }
    items
}

/// `n_rows` simulated cases of which exactly `n_rows - n_incomplete` are
/// complete; each incomplete case misses one to three items.
pub fn generate(n_rows: usize, n_incomplete: usize, seed: u64) -> ObservedDataset {
    assert!(n_incomplete <= n_rows, "more incomplete cases than rows");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<Option<f64>>> = (0..n_rows)
        .map(|_| draw_case(&mut rng).into_iter().map(Some).collect())
        .collect();
    let q = rows.first().map_or(0, Vec::len);
    let mut order: Vec<usize> = (0..n_rows).collect();
    for i in (1..n_rows).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for &r in &order[..n_incomplete] {
        let misses = rng.random_range(1..=3);
        for _ in 0..misses {
            let c = rng.random_range(0..q);
            rows[r][c] = None;
        }
    }
    let ids = (1..=n_rows).map(|i| format!("s{i:04}")).collect();
    ObservedDataset::new(schema(), ids, rows).expect("simulated data matches its schema")
}

/// A sample the size of the case study: 1507 rows, 1015 complete.
pub fn case_study_like(seed: u64) -> ObservedDataset {
    generate(CASE_STUDY_ROWS, CASE_STUDY_ROWS - CASE_STUDY_COMPLETE, seed)
}

/// Pipeline config for a simulated data file: every item ordinal with five
/// levels, `PYD` as the prediction target and a `PP` by `CFS` contour grid.
pub fn example_config(data_file: impl Into<PathBuf>) -> PipelineConfig {
    let text = format!(
        "[data]\npath = {path:?}\nid_column = \"id\"\n\n[[data.variables]]\nnames = {names:?}\ntype = \"ordinal\"\nlevels = 5\n\n\
         [model]\nspec = \"\"\"\n{spec}\"\"\"\n\n[prediction]\ntarget = \"PYD\"\n\n\
         [analysis.contour]\ntarget = \"PYD\"\naxes = [\"PP\", \"CFS\"]\n",
        path = data_file.into().display().to_string(),
        names = all_item_names(),
        spec = model_spec(),
    );
    PipelineConfig::from_toml_str(&text).expect("example config parses")
}

/// Writes `data.csv` and `config.toml` into `dir` and returns the config path.
pub fn write_example(dir: &Path, n_rows: usize, n_incomplete: usize, seed: u64) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let data = generate(n_rows, n_incomplete, seed);
    let file = std::fs::File::create(dir.join("data.csv"))?;
    data.write_csv(std::io::BufWriter::new(file), Some("id"))
        .map_err(std::io::Error::other)?;
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, example_config("data.csv").to_toml_string())?;
    Ok(config_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::parse_model_spec;

    #[test]
    fn spec_parses_and_names_every_item() {
        let model = parse_model_spec(&model_spec()).unwrap();
        assert_eq!(model.observed().len(), all_item_names().len());
        assert_eq!(model.latents().len(), 3 + 4 + 4 + 2 + 2 + 7);
        assert!(model.degrees_of_freedom() > 0);
    }

    #[test]
    fn complete_case_count_is_exact() {
        let data = case_study_like(3);
        let names = all_item_names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        assert_eq!(data.n_cases(), CASE_STUDY_ROWS);
        assert_eq!(data.complete_cases(&refs).n_cases(), CASE_STUDY_COMPLETE);
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(generate(50, 10, 9), generate(50, 10, 9));
        assert_ne!(generate(50, 10, 9), generate(50, 10, 10));
    }

    #[test]
    fn example_config_round_trips_through_toml() {
        let config = example_config("data.csv");
        assert_eq!(config.schema(), schema());
        let back = PipelineConfig::from_toml_str(&config.to_toml_string()).unwrap();
        assert_eq!(back, config);
    }
}
