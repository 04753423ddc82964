use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub const PREDICTION_COLUMNS: [&str; 7] = [
    "instance_id",
    "true_label",
    "predicted_label",
    "score",
    "group",
    "supervisor_flag",
    "context_changed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub instance_id: String,
    pub true_label: Option<String>,
    pub predicted_label: String,
    pub score: Option<f64>,
    pub group: Option<String>,
    pub supervisor_flag: Option<bool>,
    pub context_changed: Option<bool>,
}

impl PredictionRow {
    pub fn new(id: impl Into<String>, truth: Option<&str>, predicted: &str) -> Self {
        PredictionRow {
            instance_id: id.into(),
            true_label: truth.map(str::to_string),
            predicted_label: predicted.to_string(),
            score: None,
            group: None,
            supervisor_flag: None,
            context_changed: None,
        }
    }

    pub fn with_group(mut self, group: &str) -> Self {
        self.group = Some(group.to_string());
        self
    }

    pub fn is_correct(&self) -> Option<bool> {
        self.true_label.as_ref().map(|t| *t == self.predicted_label)
    }
}

/// Per-instance model outputs keyed by a unique instance id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionTable {
    rows: Vec<PredictionRow>,
    index: HashMap<String, usize>,
}

impl PredictionTable {
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if index.insert(row.instance_id.clone(), i).is_some() {
                return Err(Error::Schema(format!(
                    "duplicate instance_id \"{}\"",
                    row.instance_id
                )));
            }
            if let Some(s) = row.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Schema(format!(
                        "score {s} of instance \"{}\" is outside [0, 1]",
                        row.instance_id
                    )));
                }
            }
        }
        Ok(PredictionTable { rows, index })
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PredictionRow> {
        self.index.get(id).map(|&i| &self.rows[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.instance_id.as_str())
    }

    pub fn labeled(&self) -> impl Iterator<Item = &PredictionRow> {
        self.rows.iter().filter(|r| r.true_label.is_some())
    }

    pub fn has_supervisor_flags(&self) -> bool {
        self.rows.iter().any(|r| r.supervisor_flag.is_some())
    }

    pub fn has_context_flags(&self) -> bool {
        self.rows.iter().any(|r| r.context_changed.is_some())
    }

    pub fn has_groups(&self) -> bool {
        self.rows.iter().any(|r| r.group.is_some())
    }

    pub fn has_labels(&self) -> bool {
        self.rows.iter().any(|r| r.true_label.is_some())
    }

    /// Reads the comma-separated prediction format. Only `instance_id` and
    /// `predicted_label` are mandatory columns; empty cells are absent values.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::parse("predictions header", e.to_string()))?
            .clone();
        let mut positions: HashMap<&str, usize> = HashMap::new();
        for (i, name) in header.iter().enumerate() {
            let Some(known) = PREDICTION_COLUMNS.iter().find(|c| **c == name) else {
                return Err(Error::Schema(format!("unknown prediction column \"{name}\"")));
            };
            if positions.insert(known, i).is_some() {
                return Err(Error::Schema(format!("duplicate prediction column \"{name}\"")));
            }
        }
        for required in ["instance_id", "predicted_label"] {
            if !positions.contains_key(required) {
                return Err(Error::Schema(format!("prediction table lacks \"{required}\"")));
            }
        }
        let mut rows = Vec::new();
        for (n, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::parse(format!("predictions row {}", n + 1), e.to_string()))?;
            let cell = |name: &str| -> Option<&str> {
                positions
                    .get(name)
                    .and_then(|&i| record.get(i))
                    .filter(|s| !s.is_empty())
            };
            let at = |name: &str| format!("predictions row {} column \"{name}\"", n + 1);
            let boolean = |name: &str| -> Result<Option<bool>> {
                cell(name)
                    .map(|s| match s {
                        "true" | "1" => Ok(true),
                        "false" | "0" => Ok(false),
                        other => Err(Error::parse(at(name), format!("\"{other}\" is not a boolean"))),
                    })
                    .transpose()
            };
            let instance_id = cell("instance_id")
                .ok_or_else(|| Error::parse(at("instance_id"), "empty instance id"))?
                .to_string();
            let predicted_label = cell("predicted_label")
                .ok_or_else(|| Error::parse(at("predicted_label"), "empty predicted label"))?
                .to_string();
            let score = cell("score")
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(at("score"), format!("\"{s}\" is not a number")))
                })
                .transpose()?;
            rows.push(PredictionRow {
                instance_id,
                true_label: cell("true_label").map(str::to_string),
                predicted_label,
                score,
                group: cell("group").map(str::to_string),
                supervisor_flag: boolean("supervisor_flag")?,
                context_changed: boolean("context_changed")?,
            });
        }
        PredictionTable::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PREDICTION_COLUMNS)?;
        let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.instance_id.clone(),
                r.true_label.clone().unwrap_or_default(),
                r.predicted_label.clone(),
                r.score.map(|s| s.to_string()).unwrap_or_default(),
                r.group.clone().unwrap_or_default(),
                flag(r.supervisor_flag),
                flag(r.context_changed),
            ])?;
        }
        w.flush()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file).map_err(|e| Error::io(path, e))
    }
}

pub fn load_predictions(path: &Path) -> Result<PredictionTable> {
    PredictionTable::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_columns_may_be_absent() {
        let t = PredictionTable::from_reader("instance_id,predicted_label\n1,a\n2,b\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert!(!t.has_labels());
        assert_eq!(t.get("2").unwrap().predicted_label, "b");
    }

    #[test]
    fn duplicate_id_rejected() {
        let csv = "instance_id,true_label,predicted_label\n42,a,a\n42,b,b\n";
        assert!(matches!(
            PredictionTable::from_reader(csv.as_bytes()),
            Err(Error::Schema(msg)) if msg.contains("42")
        ));
    }

    #[test]
    fn score_out_of_range_rejected() {
        let csv = "instance_id,predicted_label,score\n1,a,1.5\n";
        assert!(matches!(
            PredictionTable::from_reader(csv.as_bytes()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn bad_boolean_rejected() {
        let csv = "instance_id,predicted_label,supervisor_flag\n1,a,yes\n";
        assert!(matches!(
            PredictionTable::from_reader(csv.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn unknown_column_rejected() {
        let csv = "instance_id,predicted_label,confidence\n1,a,0.3\n";
        assert!(matches!(
            PredictionTable::from_reader(csv.as_bytes()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn write_then_read() {
        let csv = "instance_id,true_label,predicted_label,score,group,supervisor_flag,context_changed\n\
                   a,x,y,0.25,g1,true,\nb,,x,,g2,false,true\n";
        let t = PredictionTable::from_reader(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        t.to_writer(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), csv);
    }
}
