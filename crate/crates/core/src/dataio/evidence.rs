use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceStatus {
    Yes,
    No,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecklistEvidence {
    pub item_id: String,
    pub status: EvidenceStatus,
    #[serde(default)]
    pub note: String,
}

impl ChecklistEvidence {
    pub fn new(item_id: &str, status: EvidenceStatus, note: &str) -> Self {
        ChecklistEvidence {
            item_id: item_id.to_string(),
            status,
            note: note.to_string(),
        }
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("{what} line {} column {}", e.line(), e.column()), e.to_string()))
}

/// Evidence must name each item at most once; membership in a quality model
/// is checked when the model is evaluated.
pub fn parse_checklist_evidence(text: &str) -> Result<Vec<ChecklistEvidence>> {
    let items: Vec<ChecklistEvidence> = from_json(text, "checklist evidence")?;
    let mut seen = std::collections::HashSet::new();
    for e in &items {
        if !seen.insert(e.item_id.as_str()) {
            return Err(Error::Schema(format!("duplicate evidence for item \"{}\"", e.item_id)));
        }
    }
    Ok(items)
}

pub fn load_checklist_evidence(path: &Path) -> Result<Vec<ChecklistEvidence>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checklist_evidence(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScopeTruthEntry {
    pub instance_id: String,
    pub out_of_scope: bool,
}

/// Annotated out-of-scope ground truth keyed by instance id.
pub fn parse_scope_truth(text: &str) -> Result<BTreeMap<String, bool>> {
    let entries: Vec<ScopeTruthEntry> = from_json(text, "scope truth")?;
    let mut map = BTreeMap::new();
    for e in entries {
        if map.insert(e.instance_id.clone(), e.out_of_scope).is_some() {
            return Err(Error::Schema(format!("duplicate scope truth for \"{}\"", e.instance_id)));
        }
    }
    Ok(map)
}

pub fn load_scope_truth(path: &Path) -> Result<BTreeMap<String, bool>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scope_truth(&text)
}
