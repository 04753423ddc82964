use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::predictions::PredictionTable;
use crate::canonical::to_canonical_string;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrainKind {
    KFold,
    LeaveOneOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrainRun {
    pub run_id: String,
    pub held_out_ids: BTreeSet<String>,
    pub predictions: PredictionTable,
}

/// Predictions of models retrained on resampled development data.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrainPredictionSet {
    pub kind: RetrainKind,
    pub runs: Vec<RetrainRun>,
    /// Ids the runs are expected to partition (k-fold) or cover (leave-one-out).
    pub instance_ids: Option<BTreeSet<String>>,
    /// Probe-set predictions of the model trained on all rows (leave-one-out).
    pub full_model: Option<PredictionTable>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunIndexEntry {
    run_id: String,
    held_out_ids: Vec<String>,
    predictions: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunIndex {
    kind: RetrainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    full_model_predictions: Option<String>,
    runs: Vec<RunIndexEntry>,
}

pub const RUN_INDEX: &str = "runs.json";

impl RetrainPredictionSet {
    pub fn new(
        kind: RetrainKind,
        runs: Vec<RetrainRun>,
        instance_ids: Option<BTreeSet<String>>,
        full_model: Option<PredictionTable>,
    ) -> Result<Self> {
        let set = RetrainPredictionSet {
            kind,
            runs,
            instance_ids,
            full_model,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let mut run_ids = HashSet::new();
        let mut held: BTreeSet<&str> = BTreeSet::new();
        for run in &self.runs {
            if !run_ids.insert(run.run_id.as_str()) {
                return Err(Error::Schema(format!("duplicate run_id \"{}\"", run.run_id)));
            }
            if self.kind == RetrainKind::LeaveOneOut && run.held_out_ids.len() != 1 {
                return Err(Error::Schema(format!(
                    "leave-one-out run \"{}\" holds out {} ids, expected exactly 1",
                    run.run_id,
                    run.held_out_ids.len()
                )));
            }
            for id in &run.held_out_ids {
                if !held.insert(id) {
                    return Err(Error::Schema(format!(
                        "instance \"{id}\" is held out by more than one run"
                    )));
                }
            }
        }
        if let Some(universe) = &self.instance_ids {
            if let Some(extra) = held.iter().find(|id| !universe.contains(**id)) {
                return Err(Error::Schema(format!(
                    "held-out id \"{extra}\" is not in instance_ids"
                )));
            }
            let missing: Vec<&str> = universe
                .iter()
                .map(String::as_str)
                .filter(|id| !held.contains(id))
                .collect();
            if !missing.is_empty() {
                return Err(Error::Coverage(format!(
                    "runs do not hold out ids: {}",
                    missing.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Loads a directory holding `runs.json` plus one prediction file per run.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let index_path = dir.join(RUN_INDEX);
        let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: RunIndex = serde_json::from_str(&text).map_err(|e| {
            Error::parse(
                format!("{} line {} column {}", index_path.display(), e.line(), e.column()),
                e.to_string(),
            )
        })?;
        let runs = index
            .runs
            .into_iter()
            .map(|entry| {
                Ok(RetrainRun {
                    predictions: PredictionTable::load(&dir.join(&entry.predictions))?,
                    run_id: entry.run_id,
                    held_out_ids: entry.held_out_ids.into_iter().collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let full_model = index
            .full_model_predictions
            .map(|f| PredictionTable::load(&dir.join(f)))
            .transpose()?;
        RetrainPredictionSet::new(
            index.kind,
            runs,
            index.instance_ids.map(|v| v.into_iter().collect()),
            full_model,
        )
    }

    /// Writes the directory format read by [`RetrainPredictionSet::load_dir`].
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.runs.len());
        for (i, run) in self.runs.iter().enumerate() {
            let file = format!("run_{i:04}.csv");
            run.predictions.write_csv(&dir.join(&file))?;
            entries.push(RunIndexEntry {
                run_id: run.run_id.clone(),
                held_out_ids: run.held_out_ids.iter().cloned().collect(),
                predictions: file,
            });
        }
        let full_model_predictions = match &self.full_model {
            Some(t) => {
                t.write_csv(&dir.join("full_model.csv"))?;
                Some("full_model.csv".to_string())
            }
            None => None,
        };
        let index = RunIndex {
            kind: self.kind,
            instance_ids: self.instance_ids.as_ref().map(|s| s.iter().cloned().collect()),
            full_model_predictions,
            runs: entries,
        };
        let path = dir.join(RUN_INDEX);
        let text = to_canonical_string(&index).expect("run index serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn load_retrain_predictions(dir: &Path) -> Result<RetrainPredictionSet> {
    RetrainPredictionSet::load_dir(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::PredictionRow;

    fn table(ids: &[&str]) -> PredictionTable {
        PredictionTable::new(ids.iter().map(|i| PredictionRow::new(*i, Some("a"), "a")).collect()).unwrap()
    }

    fn loo_runs(ids: &[&str]) -> Vec<RetrainRun> {
        ids.iter()
            .map(|id| RetrainRun {
                run_id: format!("loo-{id}"),
                held_out_ids: [id.to_string()].into(),
                predictions: table(&["p1", "p2"]),
            })
            .collect()
    }

    #[test]
    fn loo_missing_id_is_coverage_error() {
        let all: Vec<String> = (0..10).map(|i| i.to_string()).collect();
        let covered: Vec<&str> = all[..9].iter().map(String::as_str).collect();
        let err = RetrainPredictionSet::new(
            RetrainKind::LeaveOneOut,
            loo_runs(&covered),
            Some(all.iter().cloned().collect()),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Coverage(msg) if msg.contains('9')));
    }

    #[test]
    fn loo_run_must_hold_out_one() {
        let mut runs = loo_runs(&["1"]);
        runs[0].held_out_ids.insert("2".into());
        assert!(matches!(
            RetrainPredictionSet::new(RetrainKind::LeaveOneOut, runs, None, None),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn kfold_overlap_rejected() {
        let runs = vec![
            RetrainRun {
                run_id: "f0".into(),
                held_out_ids: ["1".to_string(), "2".to_string()].into(),
                predictions: table(&["1", "2"]),
            },
            RetrainRun {
                run_id: "f1".into(),
                held_out_ids: ["2".to_string(), "3".to_string()].into(),
                predictions: table(&["2", "3"]),
            },
        ];
        assert!(matches!(
            RetrainPredictionSet::new(RetrainKind::KFold, runs, None, None),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = RetrainPredictionSet::new(
            RetrainKind::LeaveOneOut,
            loo_runs(&["1", "2"]),
            Some(["1".to_string(), "2".to_string()].into()),
            Some(table(&["p1", "p2"])),
        )
        .unwrap();
        set.write_dir(dir.path()).unwrap();
        assert_eq!(RetrainPredictionSet::load_dir(dir.path()).unwrap(), set);
    }
}
