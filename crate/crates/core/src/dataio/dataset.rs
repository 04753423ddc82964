use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Numeric,
    Categorical,
    Text,
    Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    Development,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl ColumnSpec {
    pub fn new(name: &str, ty: ColumnType) -> Self {
        ColumnSpec {
            name: name.to_string(),
            ty,
        }
    }
}

pub const SUBSET_VALUES: [&str; 3] = ["train", "validation", "test"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataManifest {
    pub dataset_role: DatasetRole,
    pub columns: Vec<ColumnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_column: Option<String>,
    /// Positive class of a binary label, used by bias and fairness audits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_class: Option<String>,
    pub evaluation_date: NaiveDate,
    #[serde(default)]
    pub missing_token: String,
}

impl DataManifest {
    pub fn new(role: DatasetRole, columns: Vec<ColumnSpec>, evaluation_date: NaiveDate) -> Self {
        DataManifest {
            dataset_role: role,
            columns,
            label_column: None,
            timestamp_column: None,
            group_column: None,
            subset_column: None,
            positive_class: None,
            evaluation_date,
            missing_token: String::new(),
        }
    }

    pub fn column_type(&self, name: &str) -> Option<ColumnType> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.ty)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column \"{}\"", c.name)));
            }
        }
        let roles = [
            ("label_column", &self.label_column, ColumnType::Categorical),
            ("group_column", &self.group_column, ColumnType::Categorical),
            ("subset_column", &self.subset_column, ColumnType::Categorical),
            ("timestamp_column", &self.timestamp_column, ColumnType::Timestamp),
        ];
        for (role, name, want) in roles {
            let Some(name) = name else { continue };
            match self.column_type(name) {
                None => {
                    return Err(Error::Schema(format!("{role} \"{name}\" is not a declared column")))
                }
                Some(ty) if ty != want => {
                    return Err(Error::Schema(format!(
                        "{role} \"{name}\" has type {ty:?}, expected {want:?}"
                    )))
                }
                Some(_) => {}
            }
        }
        if self.positive_class.is_some() && self.label_column.is_none() {
            return Err(Error::Schema("positive_class given without label_column".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DataManifest = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("manifest line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Columns that describe rows rather than model inputs.
    pub fn is_role_column(&self, name: &str) -> bool {
        [&self.label_column, &self.subset_column, &self.timestamp_column]
            .into_iter()
            .any(|c| c.as_deref() == Some(name))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
    Text(Vec<Option<String>>),
    Timestamp(Vec<Option<NaiveDateTime>>),
}

impl ColumnValues {
    fn empty(ty: ColumnType) -> Self {
        match ty {
            ColumnType::Numeric => ColumnValues::Numeric(Vec::new()),
            ColumnType::Categorical => ColumnValues::Categorical(Vec::new()),
            ColumnType::Text => ColumnValues::Text(Vec::new()),
            ColumnType::Timestamp => ColumnValues::Timestamp(Vec::new()),
        }
    }

    fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) | ColumnValues::Text(v) => v.len(),
            ColumnValues::Timestamp(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

impl Column {
    pub fn numeric(name: &str, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Numeric(values),
        }
    }

    pub fn categorical(name: &str, values: Vec<Option<String>>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Categorical(values),
        }
    }

    pub fn text(name: &str, values: Vec<Option<String>>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Text(values),
        }
    }

    pub fn timestamp(name: &str, values: Vec<Option<NaiveDateTime>>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Timestamp(values),
        }
    }

    pub fn ty(&self) -> ColumnType {
        match self.values {
            ColumnValues::Numeric(_) => ColumnType::Numeric,
            ColumnValues::Categorical(_) => ColumnType::Categorical,
            ColumnValues::Text(_) => ColumnType::Text,
            ColumnValues::Timestamp(_) => ColumnType::Timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.values {
            ColumnValues::Numeric(v) => v[row].is_none(),
            ColumnValues::Categorical(v) | ColumnValues::Text(v) => v[row].is_none(),
            ColumnValues::Timestamp(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match &self.values {
            ColumnValues::Numeric(v) => Some(v),
            _ => None,
        }
    }

    /// Values of a categorical or text column.
    pub fn as_strings(&self) -> Option<&[Option<String>]> {
        match &self.values {
            ColumnValues::Categorical(v) | ColumnValues::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_timestamps(&self) -> Option<&[Option<NaiveDateTime>]> {
        match &self.values {
            ColumnValues::Timestamp(v) => Some(v),
            _ => None,
        }
    }

    /// Non-missing numeric values in row order.
    pub fn observed_numbers(&self) -> Vec<f64> {
        self.as_numeric()
            .map(|v| v.iter().flatten().copied().collect())
            .unwrap_or_default()
    }

    /// Text form of a cell as written to CSV; `None` when missing.
    pub fn render(&self, row: usize) -> Option<String> {
        match &self.values {
            ColumnValues::Numeric(v) => v[row].map(|x| x.to_string()),
            ColumnValues::Categorical(v) | ColumnValues::Text(v) => v[row].clone(),
            ColumnValues::Timestamp(v) => v[row].map(render_timestamp),
        }
    }

    /// Unambiguous byte-canonical form of a cell, tagged by type.
    pub(crate) fn canonical_cell(&self, row: usize) -> String {
        match &self.values {
            ColumnValues::Numeric(v) => match v[row] {
                // fold -0.0 into 0.0
                Some(x) => format!("N{:016x}", (x + 0.0).to_bits()),
                None => "M".into(),
            },
            ColumnValues::Categorical(v) | ColumnValues::Text(v) => match &v[row] {
                Some(s) => format!("S{}:{s}", s.len()),
                None => "M".into(),
            },
            ColumnValues::Timestamp(v) => match v[row] {
                Some(t) => format!("T{}", t.and_utc().timestamp()),
                None => "M".into(),
            },
        }
    }

    pub fn select(&self, rows: &[usize]) -> Column {
        fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&i| v[i].clone()).collect()
        }
        let values = match &self.values {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(pick(v, rows)),
            ColumnValues::Categorical(v) => ColumnValues::Categorical(pick(v, rows)),
            ColumnValues::Text(v) => ColumnValues::Text(pick(v, rows)),
            ColumnValues::Timestamp(v) => ColumnValues::Timestamp(pick(v, rows)),
        };
        Column {
            name: self.name.clone(),
            values,
        }
    }
}

pub fn render_timestamp(t: NaiveDateTime) -> String {
    if t.time() == NaiveTime::MIN {
        t.date().format("%Y-%m-%d").to_string()
    } else {
        t.format("%Y-%m-%dT%H:%M:%S%.f").to_string()
    }
}

/// Parses an ISO-8601 date or date-time. Offsets are converted to UTC.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_time(NaiveTime::MIN));
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// A typed table whose columns follow its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    manifest: DataManifest,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from in-memory columns, checking them against the manifest.
    pub fn new(manifest: DataManifest, columns: Vec<Column>) -> Result<Self> {
        manifest.validate()?;
        let names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        let declared: Vec<&str> = manifest.columns.iter().map(|c| c.name.as_str()).collect();
        if names != declared {
            return Err(Error::ManifestMismatch(format!(
                "columns {names:?} do not match manifest {declared:?}"
            )));
        }
        for (col, spec) in columns.iter().zip(&manifest.columns) {
            if col.ty() != spec.ty {
                return Err(Error::ManifestMismatch(format!(
                    "column \"{}\" has type {:?}, manifest says {:?}",
                    col.name,
                    col.ty(),
                    spec.ty
                )));
            }
        }
        let n_rows = columns.first().map_or(0, Column::len);
        if let Some(c) = columns.iter().find(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch(format!(
                "column \"{}\" has {} rows, expected {n_rows}",
                c.name,
                c.len()
            )));
        }
        if let Some(subset) = &manifest.subset_column {
            let col = columns.iter().find(|c| &c.name == subset).expect("validated");
            for (row, v) in col.as_strings().expect("categorical").iter().enumerate() {
                if let Some(v) = v {
                    if !SUBSET_VALUES.contains(&v.as_str()) {
                        return Err(Error::parse(
                            format!("row {} column \"{subset}\"", row + 1),
                            format!("unknown subset value \"{v}\" (expected train, validation or test)"),
                        ));
                    }
                }
            }
        }
        Ok(Dataset {
            manifest,
            columns,
            n_rows,
        })
    }

    /// Reads a header-bearing comma-separated table.
    pub fn from_reader<R: Read>(reader: R, manifest: DataManifest) -> Result<Self> {
        manifest.validate()?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_error(&e))?
            .iter()
            .map(str::to_string)
            .collect();
        let declared: Vec<&str> = manifest.columns.iter().map(|c| c.name.as_str()).collect();
        if header != declared {
            return Err(Error::ManifestMismatch(format!(
                "header {header:?} does not match manifest columns {declared:?}"
            )));
        }
        let mut values: Vec<ColumnValues> =
            manifest.columns.iter().map(|c| ColumnValues::empty(c.ty)).collect();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| csv_error(&e))?;
            for ((field, spec), out) in record.iter().zip(&manifest.columns).zip(&mut values) {
                let missing = field == manifest.missing_token;
                let bad = |what: &str| {
                    Error::parse(
                        format!("row {} column \"{}\"", row + 1, spec.name),
                        format!("cannot parse \"{field}\" as {what}"),
                    )
                };
                match out {
                    ColumnValues::Numeric(v) => v.push(if missing {
                        None
                    } else {
                        let x: f64 = field.parse().map_err(|_| bad("a number"))?;
                        if !x.is_finite() {
                            return Err(bad("a finite number"));
                        }
                        Some(x)
                    }),
                    ColumnValues::Categorical(v) | ColumnValues::Text(v) => {
                        v.push((!missing).then(|| field.to_string()))
                    }
                    ColumnValues::Timestamp(v) => v.push(if missing {
                        None
                    } else {
                        Some(parse_timestamp(field).ok_or_else(|| bad("an ISO-8601 timestamp"))?)
                    }),
                }
            }
        }
        let columns = manifest
            .columns
            .iter()
            .zip(values)
            .map(|(spec, values)| Column {
                name: spec.name.clone(),
                values,
            })
            .collect();
        Dataset::new(manifest, columns)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let to_io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(to_io)?;
        for row in 0..self.n_rows {
            let cells: Vec<String> = self
                .columns
                .iter()
                .map(|c| c.render(row).unwrap_or_else(|| self.manifest.missing_token.clone()))
                .collect();
            w.write_record(&cells).map_err(to_io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn manifest(&self) -> &DataManifest {
        &self.manifest
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.columns[col].is_missing(row)
    }

    pub fn missing_cells(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            manifest: self.manifest.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    /// Replaces the columns (same names and types) keeping the manifest.
    pub(crate) fn with_columns(&self, columns: Vec<Column>) -> Result<Dataset> {
        Dataset::new(self.manifest.clone(), columns)
    }

    fn role_strings(&self, role: Option<&String>, what: &'static str) -> Result<&[Option<String>]> {
        let name = role.ok_or(Error::MissingColumn(what))?;
        Ok(self
            .column(name)
            .and_then(Column::as_strings)
            .expect("manifest validated role column"))
    }

    pub fn labels(&self) -> Result<&[Option<String>]> {
        self.role_strings(self.manifest.label_column.as_ref(), "label")
    }

    pub fn groups(&self) -> Result<&[Option<String>]> {
        self.role_strings(self.manifest.group_column.as_ref(), "group")
    }

    pub fn subsets(&self) -> Result<&[Option<String>]> {
        self.role_strings(self.manifest.subset_column.as_ref(), "subset")
    }

    pub fn timestamps(&self) -> Result<&[Option<NaiveDateTime>]> {
        let name = self
            .manifest
            .timestamp_column
            .as_ref()
            .ok_or(Error::MissingColumn("timestamp"))?;
        Ok(self
            .column(name)
            .and_then(Column::as_timestamps)
            .expect("manifest validated timestamp column"))
    }
}

fn csv_error(e: &csv::Error) -> Error {
    let location = e
        .position()
        .map(|p| format!("line {}", p.line()))
        .unwrap_or_else(|| "csv".to_string());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("row has {len} fields, expected {expected_len}"),
        _ => e.to_string(),
    };
    Error::parse(location, message)
}

/// Reads a dataset and its manifest from disk.
pub fn load_dataset(data_path: &Path, manifest_path: &Path) -> Result<Dataset> {
    let manifest = DataManifest::load(manifest_path)?;
    let file = std::fs::File::open(data_path).map_err(|e| Error::io(data_path, e))?;
    Dataset::from_reader(file, manifest).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", data_path.display()),
            message,
        },
        other => other,
    })
}

#[derive(Debug, Clone)]
pub struct Subsets {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

/// Partitions rows by the manifest's subset column. Rows with a missing
/// subset value belong to no subset and are reported.
pub fn split_subsets(d: &Dataset) -> Result<Subsets> {
    let subsets = d.subsets()?;
    let mut idx: [Vec<usize>; 3] = Default::default();
    let mut unassigned = 0;
    for (row, v) in subsets.iter().enumerate() {
        match v.as_deref() {
            Some("train") => idx[0].push(row),
            Some("validation") => idx[1].push(row),
            Some("test") => idx[2].push(row),
            _ => unassigned += 1,
        }
    }
    let mut warnings = Vec::new();
    for (name, rows) in SUBSET_VALUES.iter().zip(&idx) {
        if rows.is_empty() {
            warnings.push(format!("subset \"{name}\" is empty"));
        }
    }
    if unassigned > 0 {
        warnings.push(format!("{unassigned} rows have no subset value"));
    }
    let [train, validation, test] = idx;
    Ok(Subsets {
        train: d.select_rows(&train),
        validation: d.select_rows(&validation),
        test: d.select_rows(&test),
        warnings,
    })
}
