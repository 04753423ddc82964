use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::simulate::files;
use super::Inputs;
use crate::dataio::{
    dir_digest, file_digest, load_checklist_evidence, load_dataset, load_model_descriptor, load_predictions,
    load_resource_log, load_retrain_predictions, load_scope_truth,
};
use crate::error::{Error, Result};

/// Locations of the input files of one evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputPaths {
    pub dev: Option<PathBuf>,
    pub dev_manifest: Option<PathBuf>,
    pub runtime: Option<PathBuf>,
    pub runtime_manifest: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub dev_predictions: Option<PathBuf>,
    pub retrain_dirs: Vec<PathBuf>,
    pub resource_log: Option<PathBuf>,
    pub model_descriptor: Option<PathBuf>,
    pub checklist: Option<PathBuf>,
    pub scope_truth: Option<PathBuf>,
}

fn both<'a>(data: &'a Option<PathBuf>, manifest: &'a Option<PathBuf>, what: &str) -> Result<Option<(&'a Path, &'a Path)>> {
    match (data, manifest) {
        (Some(d), Some(m)) => Ok(Some((d, m))),
        (None, None) => Ok(None),
        _ => Err(Error::InvalidArgument(format!("{what} data and manifest must be given together"))),
    }
}

fn add(digests: &mut BTreeMap<String, String>, key: &str, path: &Path) -> Result<()> {
    digests.insert(key.to_string(), file_digest(path)?);
    Ok(())
}

impl InputPaths {
    /// The layout written by the use-case simulator.
    pub fn simulated(dir: &Path) -> Self {
        let p = |name: &str| Some(dir.join(name));
        InputPaths {
            dev: p(files::DEV),
            dev_manifest: p(files::DEV_MANIFEST),
            runtime: p(files::RUNTIME),
            runtime_manifest: p(files::RUNTIME_MANIFEST),
            predictions: p(files::PREDICTIONS),
            dev_predictions: p(files::DEV_PREDICTIONS),
            retrain_dirs: vec![dir.join(files::RETRAIN_KFOLD), dir.join(files::RETRAIN_LOO)],
            resource_log: p(files::RESOURCE_LOG),
            model_descriptor: p(files::MODEL_DESCRIPTOR),
            checklist: p(files::CHECKLIST),
            scope_truth: p(files::SCOPE_TRUTH),
        }
    }

    /// Loads and validates every given input and records its SHA-256 digest.
    pub fn load(&self) -> Result<Inputs> {
        let mut inputs = Inputs::default();
        let mut digests = BTreeMap::new();
        if let Some((d, m)) = both(&self.dev, &self.dev_manifest, "development")? {
            inputs.dev = Some(load_dataset(d, m)?);
            add(&mut digests, "dev", d)?;
            add(&mut digests, "dev_manifest", m)?;
        }
        if let Some((d, m)) = both(&self.runtime, &self.runtime_manifest, "runtime")? {
            inputs.runtime = Some(load_dataset(d, m)?);
            add(&mut digests, "runtime", d)?;
            add(&mut digests, "runtime_manifest", m)?;
        }
        if let Some(path) = &self.predictions {
            inputs.predictions = Some(load_predictions(path)?);
            add(&mut digests, "predictions", path)?;
        }
        if let Some(path) = &self.dev_predictions {
            inputs.dev_predictions = Some(load_predictions(path)?);
            add(&mut digests, "dev_predictions", path)?;
        }
        for (i, dir) in self.retrain_dirs.iter().enumerate() {
            let set = load_retrain_predictions(dir)?;
            if inputs.retrain.iter().any(|r| r.kind == set.kind) {
                return Err(Error::Schema(format!(
                    "{}: a retrain directory of kind {:?} was already given",
                    dir.display(),
                    set.kind
                )));
            }
            inputs.retrain.push(set);
            digests.insert(format!("retrain_dir_{}", i + 1), dir_digest(dir)?);
        }
        if let Some(path) = &self.resource_log {
            inputs.resource_log = Some(load_resource_log(path)?);
            add(&mut digests, "resource_log", path)?;
        }
        if let Some(path) = &self.model_descriptor {
            inputs.descriptor = Some(load_model_descriptor(path)?);
            add(&mut digests, "model_descriptor", path)?;
        }
        if let Some(path) = &self.checklist {
            inputs.checklist = Some(load_checklist_evidence(path)?);
            add(&mut digests, "checklist", path)?;
        }
        if let Some(path) = &self.scope_truth {
            inputs.scope_truth = Some(load_scope_truth(path)?);
            add(&mut digests, "scope_truth", path)?;
        }
        inputs.digests = digests;
        Ok(inputs)
    }
}
