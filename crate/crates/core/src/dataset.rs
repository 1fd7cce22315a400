//! Case-level data: schema, CSV ingest, complete-case filtering and the
//! train/validation split.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tokens treated as missing when a schema entry does not override them.
pub const DEFAULT_MISSING_CODES: [&str; 2] = ["", "NA"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown column `{0}`: not present in both the header and the schema")]
    UnknownColumn(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("ordinal variable `{name}` needs at least 2 levels, got {levels}")]
    TooFewLevels { name: String, levels: u32 },
    #[error("row {row}, column `{column}`: value {value} outside the declared level range")]
    OutOfRangeValue {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}, column `{column}`: cannot parse `{text}`")]
    UnparseableCell {
        row: usize,
        column: String,
        text: String,
    },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("split of {n} cases at fraction {fraction} leaves one side empty")]
    DegenerateSplit { n: usize, fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum VariableKind {
    Continuous,
    /// Integer-coded responses `min..=min + levels - 1`.
    Ordinal {
        levels: u32,
        #[serde(default = "default_ordinal_min")]
        min: i64,
    },
}

fn default_ordinal_min() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: VariableKind,
    #[serde(default = "default_missing_codes")]
    pub missing_codes: Vec<String>,
}

fn default_missing_codes() -> Vec<String> {
    DEFAULT_MISSING_CODES.iter().map(|s| s.to_string()).collect()
}

impl VariableSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Continuous,
            missing_codes: default_missing_codes(),
        }
    }

    pub fn ordinal(name: impl Into<String>, levels: u32) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Ordinal { levels, min: 1 },
            missing_codes: default_missing_codes(),
        }
    }

    fn is_missing(&self, text: &str) -> bool {
        self.missing_codes.iter().any(|c| c == text.trim())
    }

    fn check_range(&self, value: f64) -> bool {
        match self.kind {
            VariableKind::Continuous => value.is_finite(),
            VariableKind::Ordinal { levels, min } => {
                value.fract() == 0.0
                    && value >= min as f64
                    && value <= (min + i64::from(levels) - 1) as f64
            }
        }
    }
}

pub fn validate_schema(schema: &[VariableSchema]) -> Result<(), DataError> {
    let mut seen = HashSet::new();
    for var in schema {
        if !seen.insert(var.name.as_str()) {
            return Err(DataError::DuplicateVariable(var.name.clone()));
        }
        if let VariableKind::Ordinal { levels, .. } = var.kind {
            if levels < 2 {
                return Err(DataError::TooFewLevels {
                    name: var.name.clone(),
                    levels,
                });
            }
        }
    }
    Ok(())
}

/// A cell is either a value or missing.
pub type Cell = Option<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    schema: Vec<VariableSchema>,
    case_ids: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl ObservedDataset {
    pub fn new(
        schema: Vec<VariableSchema>,
        case_ids: Vec<String>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self, DataError> {
        validate_schema(&schema)?;
        assert_eq!(case_ids.len(), rows.len(), "one case id per row");
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(DataError::RaggedRow {
                    row: r + 1,
                    found: row.len(),
                    expected: schema.len(),
                });
            }
            for (var, cell) in schema.iter().zip(row) {
                if let Some(v) = *cell {
                    if !var.check_range(v) {
                        return Err(DataError::OutOfRangeValue {
                            row: r + 1,
                            column: var.name.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(Self {
            schema,
            case_ids,
            rows,
        })
    }

    pub fn schema(&self) -> &[VariableSchema] {
        &self.schema
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_cases(&self) -> usize {
        self.rows.len()
    }

    pub fn n_vars(&self) -> usize {
        self.schema.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|v| v.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let c = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// Rows with no missing cell among `vars`, in their original order.
    /// Names not in the schema are ignored.
    pub fn complete_cases(&self, vars: &[&str]) -> ObservedDataset {
        let cols: Vec<usize> = vars.iter().filter_map(|v| self.column_index(v)).collect();
        let keep: Vec<usize> = (0..self.rows.len())
            .filter(|&r| cols.iter().all(|&c| self.rows[r][c].is_some()))
            .collect();
        ObservedDataset {
            schema: self.schema.clone(),
            case_ids: keep.iter().map(|&r| self.case_ids[r].clone()).collect(),
            rows: keep.iter().map(|&r| self.rows[r].clone()).collect(),
        }
    }

    /// Row subset by case id, keeping dataset order.
    pub fn select_ids(&self, ids: &BTreeSet<String>) -> ObservedDataset {
        let keep: Vec<usize> = (0..self.rows.len())
            .filter(|&r| ids.contains(&self.case_ids[r]))
            .collect();
        ObservedDataset {
            schema: self.schema.clone(),
            case_ids: keep.iter().map(|&r| self.case_ids[r].clone()).collect(),
            rows: keep.iter().map(|&r| self.rows[r].clone()).collect(),
        }
    }

    /// Writes the dataset back to CSV. Missing cells are written as the
    /// variable's first missing code; the case id goes in `id_column` when given.
    pub fn write_csv<W: std::io::Write>(
        &self,
        writer: W,
        id_column: Option<&str>,
    ) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = Vec::new();
        if let Some(id) = id_column {
            header.push(id);
        }
        header.extend(self.schema.iter().map(|v| v.name.as_str()));
        w.write_record(&header)?;
        for (id, row) in self.case_ids.iter().zip(&self.rows) {
            let mut rec: Vec<String> = Vec::with_capacity(row.len() + 1);
            if id_column.is_some() {
                rec.push(id.clone());
            }
            for (var, cell) in self.schema.iter().zip(row) {
                rec.push(match cell {
                    Some(v) => format_value(*v),
                    None => var.missing_codes.first().cloned().unwrap_or_default(),
                });
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
fn format_value(v: f64) -> String {
    format!("{v}")
}

/// Loads a CSV file. Header names must cover the schema; extra columns are
/// rejected unless named `id_column`, which supplies case ids (otherwise ids
/// are 1-based row numbers).
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &[VariableSchema],
    id_column: Option<&str>,
) -> Result<ObservedDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema, id_column)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    schema: &[VariableSchema],
    id_column: Option<&str>,
) -> Result<ObservedDataset, DataError> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut positions: HashMap<&str, usize> = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        positions.insert(h.as_str(), i);
    }
    for h in &header {
        let known = schema.iter().any(|v| &v.name == h) || Some(h.as_str()) == id_column;
        if !known {
            return Err(DataError::UnknownColumn(h.clone()));
        }
    }
    let mut col_of = Vec::with_capacity(schema.len());
    for var in schema {
        match positions.get(var.name.as_str()) {
            Some(&i) => col_of.push(i),
            None => return Err(DataError::UnknownColumn(var.name.clone())),
        }
    }
    let id_pos = match id_column {
        Some(id) => Some(
            *positions
                .get(id)
                .ok_or_else(|| DataError::UnknownColumn(id.to_string()))?,
        ),
        None => None,
    };

    let mut case_ids = Vec::new();
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                row: row_no,
                found: record.len(),
                expected: header.len(),
            });
        }
        let mut row = Vec::with_capacity(schema.len());
        for (var, &c) in schema.iter().zip(&col_of) {
            let text = &record[c];
            if var.is_missing(text) {
                row.push(None);
                continue;
            }
            let value: f64 = text
                .trim()
                .parse()
                .map_err(|_| DataError::UnparseableCell {
                    row: row_no,
                    column: var.name.clone(),
                    text: text.to_string(),
                })?;
            if !var.check_range(value) {
                return Err(DataError::OutOfRangeValue {
                    row: row_no,
                    column: var.name.clone(),
                    value,
                });
            }
            row.push(Some(value));
        }
        case_ids.push(match id_pos {
            Some(p) => record[p].to_string(),
            None => row_no.to_string(),
        });
        rows.push(row);
    }
    Ok(ObservedDataset {
        schema: schema.to_vec(),
        case_ids,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAssignment {
    pub train_ids: BTreeSet<String>,
    pub validation_ids: BTreeSet<String>,
    pub seed: u64,
    pub fraction: f64,
}

impl fmt::Display for SplitAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} train / {} validation (seed {})",
            self.train_ids.len(),
            self.validation_ids.len(),
            self.seed
        )
    }
}

/// Training-set size: `fraction * n` rounded half-to-even. Products within
/// 1e-9 of a half-integer count as ties so that e.g. 0.7 * 1015 = 710.5 is
/// treated as the exact tie it represents.
pub fn train_size(n: usize, fraction: f64) -> usize {
    let x = fraction * n as f64;
    let floor = x.floor();
    let frac = x - floor;
    let f = floor as usize;
    if (frac - 0.5).abs() < 1e-9 {
        if f % 2 == 0 {
            f
        } else {
            f + 1
        }
    } else if frac < 0.5 {
        f
    } else {
        f + 1
    }
}

/// Uniform index in `0..bound` from one 64-bit draw (multiply-shift).
fn bounded(rng: &mut ChaCha8Rng, bound: usize) -> usize {
    ((u128::from(rng.next_u64()) * bound as u128) >> 64) as usize
}

/// Simple random split without replacement.
///
/// Algorithm: ids in dataset order are shuffled by a descending Fisher-Yates
/// pass driven by ChaCha8 seeded with `seed_from_u64(seed)`, where position
/// `i` swaps with `floor(u64 * (i + 1) / 2^64)`; the first `train_size`
/// shuffled ids form the training set.
pub fn split(data: &ObservedDataset, fraction: f64, seed: u64) -> Result<SplitAssignment, DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidFraction(fraction));
    }
    let n = data.n_cases();
    let n_train = train_size(n, fraction);
    if n_train == 0 || n_train == n {
        return Err(DataError::DegenerateSplit { n, fraction });
    }
    let mut ids: Vec<String> = data.case_ids().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..ids.len()).rev() {
        let j = bounded(&mut rng, i + 1);
        ids.swap(i, j);
    }
    let validation_ids = ids.split_off(n_train).into_iter().collect();
    Ok(SplitAssignment {
        train_ids: ids.into_iter().collect(),
        validation_ids,
        seed,
        fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema3() -> Vec<VariableSchema> {
        vec![
            VariableSchema::ordinal("a", 5),
            VariableSchema::ordinal("b", 5),
            VariableSchema::continuous("c"),
        ]
    }

    #[test]
    fn na_cell_becomes_missing() {
        let text = "a,b,c\n1,2,0.5\n3,NA,1.5\n5,5,-2\n";
        let d = read_csv(text.as_bytes(), &schema3(), None).unwrap();
        assert_eq!(d.n_cases(), 3);
        assert_eq!(d.missing_count(), 1);
        assert_eq!(d.rows()[1][1], None);
        assert_eq!(d.rows()[2][2], Some(-2.0));
    }

    #[test]
    fn header_order_is_free_and_empty_cells_are_missing() {
        let text = "c,a,b\n0.5,1,\n";
        let d = read_csv(text.as_bytes(), &schema3(), None).unwrap();
        assert_eq!(d.rows()[0], vec![Some(1.0), None, Some(0.5)]);
    }

    #[test]
    fn missing_schema_column_is_unknown_column() {
        let text = "a,c\n1,0.5\n";
        match read_csv(text.as_bytes(), &schema3(), None) {
            Err(DataError::UnknownColumn(c)) => assert_eq!(c, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_header_column_is_unknown_column() {
        let text = "a,b,c,zzz\n1,1,1,1\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &schema3(), None),
            Err(DataError::UnknownColumn(c)) if c == "zzz"
        ));
    }

    #[test]
    fn out_of_range_reports_row_and_column() {
        let text = "a,b,c\n1,1,1\n1,6,1\n";
        match read_csv(text.as_bytes(), &schema3(), None) {
            Err(DataError::OutOfRangeValue { row, column, value }) => {
                assert_eq!((row, column.as_str(), value), (2, "b", 6.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unparseable_cell() {
        let text = "a,b,c\n1,1,abc\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &schema3(), None),
            Err(DataError::UnparseableCell { row: 1, .. })
        ));
    }

    #[test]
    fn quoted_fields_and_id_column() {
        let text = "id,a,b,c\n\"x,1\",1,2,\"3.25\"\n";
        let d = read_csv(text.as_bytes(), &schema3(), Some("id")).unwrap();
        assert_eq!(d.case_ids(), &["x,1".to_string()]);
        assert_eq!(d.rows()[0][2], Some(3.25));
    }

    #[test]
    fn schema_validation() {
        let dup = vec![VariableSchema::continuous("a"), VariableSchema::continuous("a")];
        assert!(matches!(validate_schema(&dup), Err(DataError::DuplicateVariable(_))));
        let bad = vec![VariableSchema::ordinal("a", 1)];
        assert!(matches!(validate_schema(&bad), Err(DataError::TooFewLevels { .. })));
    }

    fn five_rows() -> ObservedDataset {
        let rows = vec![
            vec![Some(1.0), Some(1.0), Some(0.0)],
            vec![Some(2.0), None, Some(0.0)],
            vec![Some(3.0), Some(1.0), Some(0.0)],
            vec![None, Some(2.0), None],
            vec![Some(5.0), Some(2.0), None],
        ];
        let ids = (1..=5).map(|i| i.to_string()).collect();
        ObservedDataset::new(schema3(), ids, rows).unwrap()
    }

    #[test]
    fn complete_cases_filters_and_preserves_order() {
        let d = five_rows();
        let cc = d.complete_cases(&["a", "b"]);
        assert_eq!(cc.case_ids(), &["1", "3", "5"]);
        let again = cc.complete_cases(&["a", "b"]);
        assert_eq!(again, cc);
        let full = d.complete_cases(&["a", "b", "c"]);
        assert_eq!(full.n_cases(), 2);
    }

    #[test]
    fn complete_cases_is_identity_without_missing() {
        let d = five_rows().complete_cases(&["a", "b", "c"]);
        assert_eq!(d.complete_cases(&["a", "b", "c"]), d);
    }

    fn n_rows(n: usize) -> ObservedDataset {
        let ids = (1..=n).map(|i| i.to_string()).collect();
        let rows = (0..n).map(|i| vec![Some(i as f64)]).collect();
        ObservedDataset::new(vec![VariableSchema::continuous("x")], ids, rows).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = n_rows(10);
        let s = split(&d, 0.7, 1).unwrap();
        assert_eq!((s.train_ids.len(), s.validation_ids.len()), (7, 3));
        assert_eq!(s, split(&d, 0.7, 1).unwrap());
        assert!(s.train_ids.is_disjoint(&s.validation_ids));
        assert_ne!(s.train_ids, split(&d, 0.7, 2).unwrap().train_ids);
    }

    #[test]
    fn split_rejects_degenerate() {
        assert!(matches!(split(&n_rows(1), 0.7, 1), Err(DataError::DegenerateSplit { .. })));
        assert!(matches!(split(&n_rows(10), 1.0, 1), Err(DataError::InvalidFraction(_))));
        assert!(matches!(split(&n_rows(10), 0.01, 1), Err(DataError::DegenerateSplit { .. })));
    }

    #[test]
    fn rounding_rule_on_1015_cases() {
        // Candidate rules evaluated on the exact product 710.5.
        let exact = 1015.0 * 7.0 / 10.0;
        let floor = (exact as f64).floor() as usize;
        let ceil = (exact as f64).ceil() as usize;
        let half_up = (exact as f64 + 0.5).floor() as usize;
        assert_eq!((floor, ceil, half_up), (710, 711, 711));
        // Half-to-even lands on 710 / 305.
        assert_eq!(train_size(1015, 0.7), 710);
        assert_eq!(1015 - train_size(1015, 0.7), 305);
        assert_eq!(train_size(10, 0.7), 7);
        assert_eq!(train_size(5, 0.5), 2);
        assert_eq!(train_size(7, 0.5), 4);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let d = five_rows();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, Some("id")).unwrap();
        let back = read_csv(buf.as_slice(), &schema3(), Some("id")).unwrap();
        assert_eq!(back, d);
    }
}
