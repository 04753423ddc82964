//! Loaders and validated in-memory forms of every evaluation input.

mod dataset;
mod descriptor;
mod evidence;
mod predictions;
mod resource;
mod retrain;

use std::path::Path;

use sha2::{Digest, Sha256};

pub use dataset::{
    load_dataset, parse_timestamp, render_timestamp, split_subsets, Column, ColumnSpec, ColumnType,
    ColumnValues, DataManifest, Dataset, DatasetRole, Subsets, SUBSET_VALUES,
};
pub use descriptor::{load_model_descriptor, InfrastructureRequirements, ModelDescriptor};
pub use evidence::{
    load_checklist_evidence, load_scope_truth, parse_checklist_evidence, parse_scope_truth,
    ChecklistEvidence, EvidenceStatus, ScopeTruthEntry,
};
pub use predictions::{load_predictions, PredictionRow, PredictionTable, PREDICTION_COLUMNS};
pub use resource::{load_resource_log, Phase, ResourceEntry, ResourceLog};
pub use retrain::{load_retrain_predictions, RetrainKind, RetrainPredictionSet, RetrainRun, RUN_INDEX};

use crate::error::{Error, Result};

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Digest of a directory: files are hashed in name order, each prefixed by its name.
pub fn dir_digest(dir: &Path) -> Result<String> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name())
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for name in names {
        let path = dir.join(&name);
        h.update(name.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(std::fs::read(&path).map_err(|e| Error::io(&path, e))?);
    }
    Ok(hex::encode(h.finalize()))
}
