//! Categorical tables, schemas and CSV ingestion.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("column `{0}` listed in the schema is missing from the CSV header")]
    MissingColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },
    #[error("line {line}: target value `{value}` is neither `{positive}` nor `{negative}`")]
    UnknownTargetValue {
        line: u64,
        value: String,
        positive: String,
        negative: String,
    },
    #[error("target column `{column}` has {count} missing entries")]
    TargetMissingEntries { column: String, count: usize },
    #[error("column `{column}` does not allow missing values but has {count}")]
    DisallowedMissing { column: String, count: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("no column named `{0}`")]
    UnknownColumn(String),
    #[error("row {row} out of range for a table of {n_rows} rows")]
    RowOutOfRange { row: usize, n_rows: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema parse error: {0}")]
    SchemaParse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Categorical,
    BinaryTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default = "default_true")]
    pub allowed_missing: bool,
}

fn default_true() -> bool {
    true
}

impl ColumnSchema {
    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            allowed_missing: true,
        }
    }

    pub fn target(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::BinaryTarget,
            allowed_missing: false,
        }
    }
}

pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["", "NA", "N/A"];

fn default_missing_tokens() -> Vec<String> {
    DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect()
}

/// Column layout of a dataset plus the two target categories.
///
/// Schemas are read from TOML:
///
/// ```toml
/// positive_label = "Yes"
/// negative_label = "No"
///
/// [[columns]]
/// name = "Age"
/// kind = "categorical"
///
/// [[columns]]
/// name = "PTSD"
/// kind = "binary-target"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
    pub positive_label: String,
    pub negative_label: String,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
}

impl Schema {
    pub fn new(
        columns: Vec<ColumnSchema>,
        positive_label: impl Into<String>,
        negative_label: impl Into<String>,
    ) -> Result<Self, TableError> {
        let mut schema = Self {
            columns,
            positive_label: positive_label.into(),
            negative_label: negative_label.into(),
            missing_tokens: default_missing_tokens(),
        };
        schema.normalize()?;
        Ok(schema)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TableError> {
        let mut schema: Schema = toml::from_str(text)?;
        schema.normalize()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TableError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes to toml")
    }

    pub fn with_missing_tokens<I, S>(mut self, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.missing_tokens = tokens.into_iter().map(Into::into).collect();
        self
    }

    /// Trims names and checks the one-target, unique-name invariants.
    fn normalize(&mut self) -> Result<(), TableError> {
        for column in &mut self.columns {
            column.name = column.name.trim().to_string();
        }
        let targets = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::BinaryTarget)
            .count();
        if targets != 1 {
            return Err(TableError::InvalidSchema(format!(
                "expected exactly one binary-target column, found {targets}"
            )));
        }
        let mut seen = HashSet::new();
        for column in &self.columns {
            if column.name.is_empty() {
                return Err(TableError::InvalidSchema("empty column name".into()));
            }
            if !seen.insert(column.name.as_str()) {
                return Err(TableError::InvalidSchema(format!(
                    "duplicate column `{}`",
                    column.name
                )));
            }
        }
        if self.positive_label == self.negative_label {
            return Err(TableError::InvalidSchema(
                "positive and negative target labels must differ".into(),
            ));
        }
        Ok(())
    }

    pub fn target(&self) -> &ColumnSchema {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::BinaryTarget)
            .expect("schema has a target column")
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Categorical)
            .map(|c| c.name.as_str())
            .collect()
    }

    fn is_missing_token(&self, value: &str) -> bool {
        self.missing_tokens.iter().any(|t| t == value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Value(String),
}

impl Cell {
    pub fn value(text: impl Into<String>) -> Self {
        Cell::Value(text.into())
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Missing => None,
            Cell::Value(v) => Some(v),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// Column-oriented categorical table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    schema: Schema,
    columns: Vec<Vec<Cell>>,
    n_rows: usize,
}

impl Table {
    /// Builds a table from columns laid out in schema order.
    pub fn new(schema: Schema, columns: Vec<Vec<Cell>>) -> Result<Self, TableError> {
        if columns.len() != schema.columns.len() {
            return Err(TableError::Shape(format!(
                "{} columns for a schema of {}",
                columns.len(),
                schema.columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if let Some((i, _)) = columns.iter().enumerate().find(|(_, c)| c.len() != n_rows) {
            return Err(TableError::Shape(format!(
                "column `{}` has {} rows, expected {n_rows}",
                schema.columns[i].name,
                columns[i].len()
            )));
        }
        let table = Self {
            schema,
            columns,
            n_rows,
        };
        table.check_target_values()?;
        Ok(table)
    }

    fn check_target_values(&self) -> Result<(), TableError> {
        let target = self.target_index();
        for (row, cell) in self.columns[target].iter().enumerate() {
            if let Cell::Value(v) = cell {
                if *v != self.schema.positive_label && *v != self.schema.negative_label {
                    return Err(TableError::UnknownTargetValue {
                        line: row as u64 + 2,
                        value: v.clone(),
                        positive: self.schema.positive_label.clone(),
                        negative: self.schema.negative_label.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Vec<Cell>] {
        &self.columns
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.schema.columns.iter().position(|c| c.name == name)
    }

    fn target_index(&self) -> usize {
        self.schema
            .columns
            .iter()
            .position(|c| c.kind == ColumnKind::BinaryTarget)
            .expect("schema has a target column")
    }

    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        self.index_of(name).map(|i| self.columns[i].as_slice())
    }

    pub fn column_mut(&mut self, name: &str) -> Option<&mut Vec<Cell>> {
        self.index_of(name).map(move |i| &mut self.columns[i])
    }

    pub fn target_column(&self) -> &[Cell] {
        &self.columns[self.target_index()]
    }

    /// Returns a table restricted to `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Table, TableError> {
        if let Some(&row) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(TableError::RowOutOfRange {
                row,
                n_rows: self.n_rows,
            });
        }
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r].clone()).collect())
            .collect();
        Ok(Table {
            schema: self.schema.clone(),
            columns,
            n_rows: rows.len(),
        })
    }

    /// Target column as 0/1 labels (1 = positive label).
    pub fn labels(&self) -> Result<LabelVector, TableError> {
        let name = self.schema.target().name.clone();
        let mut missing = 0;
        let labels: Vec<u8> = self
            .target_column()
            .iter()
            .map(|cell| match cell {
                Cell::Value(v) if *v == self.schema.positive_label => 1,
                Cell::Value(_) => 0,
                Cell::Missing => {
                    missing += 1;
                    0
                }
            })
            .collect();
        if missing > 0 {
            return Err(TableError::TargetMissingEntries {
                column: name,
                count: missing,
            });
        }
        Ok(LabelVector(labels))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TableError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(self.schema.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n_rows {
            out.write_record(
                self.columns
                    .iter()
                    .map(|col| col[row].as_str().unwrap_or("")),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Reads a CSV file against `schema`.
///
/// Header names and cell values are trimmed. Cells equal to one of the
/// schema's missing tokens become [`Cell::Missing`]. Columns not named in the
/// schema are ignored.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Table, TableError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Table, TableError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = csv_reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let positions = schema
        .columns
        .iter()
        .map(|col| {
            header
                .iter()
                .position(|h| *h == col.name)
                .ok_or_else(|| TableError::MissingColumn(col.name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut columns: Vec<Vec<Cell>> = vec![Vec::new(); schema.columns.len()];
    for record in csv_reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(TableError::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (column, &pos) in columns.iter_mut().zip(&positions) {
            let raw = record[pos].trim();
            column.push(if schema.is_missing_token(raw) {
                Cell::Missing
            } else {
                Cell::Value(raw.to_string())
            });
        }
    }
    Table::new(schema.clone(), columns)
}

pub fn parse_csv_str(text: &str, schema: &Schema) -> Result<Table, TableError> {
    read_csv(text.as_bytes(), schema)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub missing: usize,
    pub distinct: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_rows: usize,
    pub columns: Vec<ColumnStats>,
    /// Keyed by target category text.
    pub target_counts: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn total_missing(&self) -> usize {
        self.columns.iter().map(|c| c.missing).sum()
    }
}

/// Summarizes missingness and cardinality; rejects missing target cells.
pub fn validate(table: &Table) -> Result<ValidationReport, TableError> {
    let schema = table.schema();
    let mut columns = Vec::with_capacity(schema.columns.len());
    for (spec, cells) in schema.columns.iter().zip(table.columns()) {
        let missing = cells.iter().filter(|c| c.is_missing()).count();
        let distinct = cells
            .iter()
            .filter_map(Cell::as_str)
            .collect::<BTreeSet<_>>()
            .len();
        if missing > 0 {
            if spec.kind == ColumnKind::BinaryTarget {
                return Err(TableError::TargetMissingEntries {
                    column: spec.name.clone(),
                    count: missing,
                });
            }
            if !spec.allowed_missing {
                return Err(TableError::DisallowedMissing {
                    column: spec.name.clone(),
                    count: missing,
                });
            }
        }
        columns.push(ColumnStats {
            name: spec.name.clone(),
            missing,
            distinct,
        });
    }
    let mut target_counts = BTreeMap::new();
    target_counts.insert(schema.negative_label.clone(), 0);
    target_counts.insert(schema.positive_label.clone(), 0);
    for value in table.target_column().iter().filter_map(Cell::as_str) {
        *target_counts.entry(value.to_string()).or_insert(0) += 1;
    }
    Ok(ValidationReport {
        n_rows: table.n_rows(),
        columns,
        target_counts,
    })
}

/// Dense row-major matrix of preprocessed features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        n_rows: usize,
        feature_names: Vec<String>,
    ) -> Result<Self, TableError> {
        if values.len() != n_rows * feature_names.len() {
            return Err(TableError::Shape(format!(
                "{} values for {n_rows} rows x {} features",
                values.len(),
                feature_names.len()
            )));
        }
        Ok(Self {
            values,
            n_rows,
            feature_names,
        })
    }

    /// Anonymous features named `f0..f{d-1}`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TableError> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(TableError::Shape("rows of unequal length".into()));
        }
        let names = (0..d).map(|j| format!("f{j}")).collect();
        Self::new(rows.concat(), rows.len(), names)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_features() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_features());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            values,
            n_rows: rows.len(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Appends rows of the same width.
    pub fn push_row(&mut self, row: &[f64]) -> Result<(), TableError> {
        if row.len() != self.n_features() {
            return Err(TableError::Shape(format!(
                "row of width {} pushed onto {} features",
                row.len(),
                self.n_features()
            )));
        }
        self.values.extend_from_slice(row);
        self.n_rows += 1;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Binary labels, 1 = positive class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(values: Vec<u8>) -> Result<Self, TableError> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(TableError::Shape(format!("label {v} is not binary")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `[count of 0, count of 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.0.iter().filter(|&&v| v == 1).count();
        [self.0.len() - ones, ones]
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector(rows.iter().map(|&r| self.0[r]).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub(crate) fn from_vec_unchecked(values: Vec<u8>) -> Self {
        Self(values)
    }

    pub(crate) fn push(&mut self, label: u8) {
        debug_assert!(label <= 1);
        self.0.push(label);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age_schema() -> Schema {
        Schema::new(
            vec![ColumnSchema::categorical("Age"), ColumnSchema::target("PTSD")],
            "Yes",
            "No",
        )
        .unwrap()
    }

    #[test]
    fn header_names_are_trimmed() {
        let csv = " Age ,PTSD\n18-25,Yes\n26-35,No\n60+,No\n";
        let table = parse_csv_str(csv, &age_schema()).unwrap();
        assert_eq!(table.n_rows(), 3);
        assert_eq!(table.schema().columns[0].name, "Age");
        assert_eq!(table.column("Age").unwrap()[2], Cell::value("60+"));
    }

    #[test]
    fn missing_tokens_become_missing() {
        let csv = "Age,PTSD\n,Yes\nNA,No\nN/A,No\n 41 ,Yes\n";
        let table = parse_csv_str(csv, &age_schema()).unwrap();
        let age = table.column("Age").unwrap();
        assert!(age[..3].iter().all(Cell::is_missing));
        assert_eq!(age[3], Cell::value("41"));
    }

    #[test]
    fn custom_missing_tokens() {
        let schema = age_schema().with_missing_tokens(["?"]);
        let table = parse_csv_str("Age,PTSD\n?,Yes\nNA,No\n", &schema).unwrap();
        let age = table.column("Age").unwrap();
        assert!(age[0].is_missing());
        assert_eq!(age[1], Cell::value("NA"));
    }

    #[test]
    fn missing_schema_column_is_reported() {
        let err = parse_csv_str("Occupation,PTSD\nfarmer,Yes\n", &age_schema()).unwrap_err();
        assert!(matches!(err, TableError::MissingColumn(name) if name == "Age"));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = parse_csv_str("Age,PTSD\n18-25,Yes\n26-35\n", &age_schema()).unwrap_err();
        assert!(matches!(err, TableError::RaggedRow { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn extra_columns_are_ignored() {
        let table = parse_csv_str("id,Age,PTSD\n1,18-25,Yes\n", &age_schema()).unwrap();
        assert_eq!(table.columns().len(), 2);
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let csv = "Age,PTSD\n\"18-25, rural\",Yes\n\"say \"\"no\"\"\",No\n";
        let table = parse_csv_str(csv, &age_schema()).unwrap();
        let age = table.column("Age").unwrap();
        assert_eq!(age[0], Cell::value("18-25, rural"));
        assert_eq!(age[1], Cell::value("say \"no\""));
    }

    #[test]
    fn unknown_target_value_is_rejected() {
        let err = parse_csv_str("Age,PTSD\n18-25,Maybe\n", &age_schema()).unwrap_err();
        assert!(matches!(err, TableError::UnknownTargetValue { .. }));
    }

    #[test]
    fn validate_counts() {
        let csv = "Age,PTSD\nflood,Yes\ncyclone,No\nflood,No\n";
        let report = validate(&parse_csv_str(csv, &age_schema()).unwrap()).unwrap();
        assert_eq!(report.total_missing(), 0);
        assert_eq!(report.columns[0].distinct, 2);
        assert_eq!(report.target_counts["Yes"], 1);
        assert_eq!(report.target_counts["No"], 2);
    }

    #[test]
    fn validate_rejects_missing_target() {
        let csv = "Age,PTSD\na,Yes\nb,No\nc,\n";
        let table = parse_csv_str(csv, &age_schema()).unwrap();
        let err = validate(&table).unwrap_err();
        assert!(matches!(err, TableError::TargetMissingEntries { count: 1, .. }));
    }

    #[test]
    fn validate_honours_allowed_missing() {
        let mut schema = age_schema();
        schema.columns[0].allowed_missing = false;
        let table = parse_csv_str("Age,PTSD\n,Yes\n", &schema).unwrap();
        assert!(matches!(
            validate(&table),
            Err(TableError::DisallowedMissing { .. })
        ));
    }

    #[test]
    fn schema_requires_single_target() {
        let err = Schema::new(vec![ColumnSchema::categorical("a")], "1", "0").unwrap_err();
        assert!(matches!(err, TableError::InvalidSchema(_)));
        let err = Schema::new(
            vec![ColumnSchema::target("a"), ColumnSchema::categorical(" a ")],
            "1",
            "0",
        )
        .unwrap_err();
        assert!(matches!(err, TableError::InvalidSchema(_)));
    }

    #[test]
    fn schema_toml_roundtrip() {
        let text = r#"
            positive_label = "Yes"
            negative_label = "No"

            [[columns]]
            name = " Age "
            kind = "categorical"

            [[columns]]
            name = "PTSD"
            kind = "binary-target"
        "#;
        let schema = Schema::from_toml_str(text).unwrap();
        assert_eq!(schema.columns[0].name, "Age");
        assert!(schema.columns[0].allowed_missing);
        assert_eq!(schema.missing_tokens, vec!["", "NA", "N/A"]);
        assert_eq!(Schema::from_toml_str(&schema.to_toml_string()).unwrap(), schema);
    }

    #[test]
    fn labels_map_positive_to_one() {
        let table = parse_csv_str("Age,PTSD\na,Yes\nb,No\n", &age_schema()).unwrap();
        assert_eq!(table.labels().unwrap().as_slice(), &[1, 0]);
    }

    #[test]
    fn feature_matrix_shape_checks() {
        assert!(FeatureMatrix::new(vec![1.0; 5], 2, vec!["a".into(), "b".into()]).is_err());
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.column(0), vec![1.0, 3.0]);
        assert_eq!(m.select_rows(&[1]).values(), &[3.0, 4.0]);
        assert!(LabelVector::new(vec![0, 2]).is_err());
    }
}
