use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::ColumnType;
use crate::error::{Error, Result};
use crate::qmodel::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfrastructureRequirements {
    pub min_memory_bytes: f64,
    pub min_compute_units: f64,
}

/// What a trained model is, how large it is, and what it needs to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub model_type_name: String,
    pub task: Task,
    pub supported_column_types: BTreeSet<ColumnType>,
    pub n_parameters: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<i64>,
    pub storage_bytes: i64,
    pub infrastructure_requirements: InfrastructureRequirements,
}

impl ModelDescriptor {
    pub fn validate(&self) -> Result<()> {
        let mut negatives = vec![
            ("n_parameters", self.n_parameters as f64),
            ("storage_bytes", self.storage_bytes as f64),
            ("min_memory_bytes", self.infrastructure_requirements.min_memory_bytes),
            ("min_compute_units", self.infrastructure_requirements.min_compute_units),
        ];
        if let Some(d) = self.depth {
            negatives.push(("depth", d as f64));
        }
        for (name, v) in negatives {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Schema(format!("model descriptor {name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: ModelDescriptor = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("model descriptor line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn load_model_descriptor(path: &Path) -> Result<ModelDescriptor> {
    ModelDescriptor::load(path)
}
