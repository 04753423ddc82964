//! System, infrastructure and environment attributes: scope compliance,
//! supervision, resource use, suitability and checklists.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ratio_or_zero, Finding, Measurement};
use crate::dataio::{
    ChecklistEvidence, ColumnValues, Dataset, EvidenceStatus, ModelDescriptor, Phase, PredictionTable, ResourceLog,
};
use crate::error::{Error, Result};
use crate::exec::{map_range, ExecMode};
use crate::qmodel::ChecklistItemSpec;
use crate::stats::{self, knn_self_distances, KnnOptions, Standardizer};

#[derive(Debug, Clone, PartialEq)]
pub struct NumericRange {
    pub column: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Novelty {
    pub k: usize,
    pub threshold_distance: f64,
    pub calibration_quantile: f64,
}

/// Intended scope of use learned from development data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeProfile {
    pub numeric: Vec<NumericRange>,
    pub vocabularies: BTreeMap<String, BTreeSet<String>>,
    /// Absent when no numeric column has spread.
    pub novelty: Option<Novelty>,
    standardizer: Standardizer,
    reference: Vec<Vec<f64>>,
}

fn numeric_matrix(d: &Dataset, columns: &[NumericRange]) -> Result<Vec<Vec<f64>>> {
    let cols = columns
        .iter()
        .map(|r| {
            d.column(&r.column)
                .and_then(|c| c.as_numeric())
                .ok_or_else(|| Error::SchemaMismatch(format!("numeric column \"{}\" missing", r.column)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..d.n_rows())
        .map(|i| cols.iter().zip(columns).map(|(c, r)| c[i].unwrap_or(r.mean)).collect())
        .collect())
}

/// Builds ranges, vocabularies and a k-NN novelty threshold at the given
/// quantile of development self-distances.
pub fn build_scope_profile(dev: &Dataset, k: usize, quantile: f64, mode: ExecMode) -> Result<ScopeProfile> {
    if dev.n_rows() <= k {
        return Err(Error::TooFewRows {
            needed: k + 1,
            available: dev.n_rows(),
        });
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile {quantile} outside (0, 1)")));
    }
    let mut numeric = Vec::new();
    let mut vocabularies = BTreeMap::new();
    for c in dev.columns() {
        if dev.manifest().is_role_column(&c.name) {
            continue;
        }
        match &c.values {
            ColumnValues::Numeric(_) => {
                let xs = c.observed_numbers();
                if xs.is_empty() {
                    continue;
                }
                let (min, max) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                numeric.push(NumericRange {
                    column: c.name.clone(),
                    min,
                    max,
                    mean: stats::mean(&xs),
                    std: stats::sample_std(&xs),
                });
            }
            ColumnValues::Categorical(v) => {
                vocabularies.insert(c.name.clone(), v.iter().flatten().cloned().collect());
            }
            _ => {}
        }
    }
    let raw = numeric_matrix(dev, &numeric)?;
    let standardizer = Standardizer::fit(&raw)?;
    let (novelty, reference) = if standardizer.kept.is_empty() {
        (None, Vec::new())
    } else {
        let reference = standardizer.transform(&raw);
        let opts = KnnOptions { k, standardize: false };
        let self_d = knn_self_distances(&reference, opts, mode)?;
        let threshold_distance = stats::quantile_nearest_rank(&self_d.distances, quantile).expect("nonempty");
        (
            Some(Novelty {
                k,
                threshold_distance,
                calibration_quantile: quantile,
            }),
            reference,
        )
    };
    Ok(ScopeProfile {
        numeric,
        vocabularies,
        novelty,
        standardizer,
        reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScopeTrigger {
    Range,
    Vocabulary,
    Novelty,
}

impl ScopeTrigger {
    pub fn label(self) -> &'static str {
        match self {
            ScopeTrigger::Range => "range",
            ScopeTrigger::Vocabulary => "vocabulary",
            ScopeTrigger::Novelty => "novelty",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopeCompliance {
    pub in_scope_fraction: f64,
    /// Out-of-scope rows with the triggers that fired.
    pub out_of_scope: Vec<(usize, Vec<ScopeTrigger>)>,
    pub n_rows: usize,
}

impl ScopeCompliance {
    pub fn out_of_scope_rows(&self) -> Vec<usize> {
        self.out_of_scope.iter().map(|(r, _)| *r).collect()
    }

    pub fn trigger_count(&self, t: ScopeTrigger) -> usize {
        self.out_of_scope.iter().filter(|(_, ts)| ts.contains(&t)).count()
    }
}

/// Fraction of runtime rows inside every range, vocabulary and the novelty radius.
pub fn scope_compliance(profile: &ScopeProfile, runtime: &Dataset, mode: ExecMode) -> Result<ScopeCompliance> {
    for (name, _) in &profile.vocabularies {
        if runtime.column(name).and_then(|c| c.as_strings()).is_none()
            || runtime.column(name).map(|c| c.ty()) != Some(crate::dataio::ColumnType::Categorical)
        {
            return Err(Error::SchemaMismatch(format!("categorical column \"{name}\" missing at runtime")));
        }
    }
    if runtime.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let raw = numeric_matrix(runtime, &profile.numeric)?;
    let numeric_cols: Vec<&[Option<f64>]> = profile
        .numeric
        .iter()
        .map(|r| runtime.column(&r.column).and_then(|c| c.as_numeric()).expect("checked above"))
        .collect();
    let vocab_cols: Vec<(&BTreeSet<String>, &[Option<String>])> = profile
        .vocabularies
        .iter()
        .map(|(n, v)| (v, runtime.column(n).and_then(|c| c.as_strings()).expect("checked above")))
        .collect();
    let triggers = map_range(mode, runtime.n_rows(), |i| {
        let mut t = Vec::new();
        let out_of_range = profile
            .numeric
            .iter()
            .zip(&numeric_cols)
            .any(|(r, col)| col[i].is_some_and(|x| x < r.min || x > r.max));
        if out_of_range {
            t.push(ScopeTrigger::Range);
        }
        if vocab_cols
            .iter()
            .any(|(vocab, col)| col[i].as_ref().is_some_and(|v| !vocab.contains(v)))
        {
            t.push(ScopeTrigger::Vocabulary);
        }
        if let Some(n) = &profile.novelty {
            let q = profile.standardizer.transform_row(&raw[i]);
            if kth_distance(&profile.reference, &q, n.k) > n.threshold_distance {
                t.push(ScopeTrigger::Novelty);
            }
        }
        t
    });
    let out_of_scope: Vec<(usize, Vec<ScopeTrigger>)> =
        triggers.into_iter().enumerate().filter(|(_, t)| !t.is_empty()).collect();
    let n = runtime.n_rows();
    Ok(ScopeCompliance {
        in_scope_fraction: (n - out_of_scope.len()) as f64 / n as f64,
        out_of_scope,
        n_rows: n,
    })
}

fn kth_distance(reference: &[Vec<f64>], q: &[f64], k: usize) -> f64 {
    let mut d: Vec<f64> = reference
        .iter()
        .map(|r| r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .collect();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    kth.sqrt()
}

impl From<ScopeCompliance> for Measurement {
    fn from(s: ScopeCompliance) -> Self {
        let mut m = Measurement::default()
            .with("in_scope_fraction", s.in_scope_fraction)
            .with("out_of_scope_count", s.out_of_scope.len());
        for t in [ScopeTrigger::Range, ScopeTrigger::Vocabulary, ScopeTrigger::Novelty] {
            m.set(&format!("{}_triggers", t.label()), s.trigger_count(t));
        }
        m.push_capped(s.out_of_scope.iter().map(|(row, ts)| {
            let names: Vec<&str> = ts.iter().map(|t| t.label()).collect();
            Finding::note(format!("out of scope: {}", names.join(", "))).row(*row)
        }));
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSupervision {
    pub error_recall: f64,
    pub false_alarm_rate: f64,
    pub wrong: usize,
    pub correct: usize,
    pub notices: Vec<Finding>,
}

/// How well the output supervisor flags wrong predictions, and how often it flags correct ones.
pub fn output_supervision_effectiveness(p: &PredictionTable) -> Result<OutputSupervision> {
    if !p.has_supervisor_flags() {
        return Err(Error::MissingSupervisorFlags);
    }
    let (mut wrong, mut wrong_flagged, mut correct, mut correct_flagged) = (0, 0, 0, 0);
    for r in p.rows() {
        let (Some(ok), Some(flag)) = (r.is_correct(), r.supervisor_flag) else {
            continue;
        };
        if ok {
            correct += 1;
            correct_flagged += flag as usize;
        } else {
            wrong += 1;
            wrong_flagged += flag as usize;
        }
    }
    if wrong + correct == 0 {
        return Err(Error::NoLabeledRows);
    }
    let mut notices = Vec::new();
    Ok(OutputSupervision {
        error_recall: ratio_or_zero(wrong_flagged, wrong, "error recall", &mut notices),
        false_alarm_rate: ratio_or_zero(correct_flagged, correct, "false-alarm rate", &mut notices),
        wrong,
        correct,
        notices,
    })
}

impl From<OutputSupervision> for Measurement {
    fn from(o: OutputSupervision) -> Self {
        let mut m = Measurement::default()
            .with("error_recall", o.error_recall)
            .with("false_alarm_rate", o.false_alarm_rate)
            .with("wrong_predictions", o.wrong)
            .with("correct_predictions", o.correct);
        m.findings.extend(o.notices);
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopeSupervision {
    pub detected: usize,
    pub missed: usize,
    /// Undefined when the truth holds no out-of-scope case.
    pub detection_rate: Option<f64>,
    pub false_alarms: usize,
}

/// Share of annotated out-of-scope instances the scope supervisor flagged.
pub fn scope_supervision_effectiveness(p: &PredictionTable, truth: &BTreeMap<String, bool>) -> Result<ScopeSupervision> {
    if !p.has_context_flags() {
        return Err(Error::MissingContextFlags);
    }
    let (mut detected, mut missed, mut false_alarms) = (0, 0, 0);
    for (id, &out) in truth {
        let flagged = p.get(id).and_then(|r| r.context_changed).unwrap_or(false);
        match (out, flagged) {
            (true, true) => detected += 1,
            (true, false) => missed += 1,
            (false, true) => false_alarms += 1,
            (false, false) => {}
        }
    }
    let total = detected + missed;
    Ok(ScopeSupervision {
        detected,
        missed,
        detection_rate: (total > 0).then(|| detected as f64 / total as f64),
        false_alarms,
    })
}

impl From<ScopeSupervision> for Measurement {
    fn from(s: ScopeSupervision) -> Self {
        let mut m = Measurement::default()
            .with("detection_rate", s.detection_rate)
            .with("detected", s.detected)
            .with("missed", s.missed)
            .with("out_of_scope_cases", s.detected + s.missed)
            .with("false_alarms", s.false_alarms);
        if s.detection_rate.is_none() {
            m.findings.push(Finding::note("no out-of-scope cases in the ground truth"));
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEfficiency {
    pub total_time_s: f64,
    pub peak_memory_bytes: u64,
    pub total_energy_joules: Option<f64>,
    pub entries: usize,
    pub entries_without_energy: usize,
}

/// Summed time and energy and the peak memory over the entries of one phase.
pub fn phase_efficiency(log: &ResourceLog, phase: Phase) -> Result<PhaseEfficiency> {
    let entries: Vec<_> = log.for_phase(phase).collect();
    if entries.is_empty() {
        return Err(Error::NoEntriesForPhase(phase.as_str().to_string()));
    }
    let energies: Vec<f64> = entries.iter().filter_map(|e| e.energy_joules).collect();
    Ok(PhaseEfficiency {
        total_time_s: entries.iter().map(|e| e.wall_time_seconds).sum(),
        peak_memory_bytes: entries.iter().map(|e| e.peak_memory_bytes as u64).max().unwrap_or(0),
        total_energy_joules: (!energies.is_empty()).then(|| energies.iter().sum()),
        entries: entries.len(),
        entries_without_energy: entries.len() - energies.len(),
    })
}

impl From<PhaseEfficiency> for Measurement {
    fn from(p: PhaseEfficiency) -> Self {
        let mut m = Measurement::default()
            .with("total_time_s", p.total_time_s)
            .with("peak_memory_bytes", p.peak_memory_bytes)
            .with("total_energy_joules", p.total_energy_joules)
            .with("entries", p.entries);
        if p.entries_without_energy > 0 {
            m.findings.push(Finding::note("entries without energy reading").value(p.entries_without_energy));
        }
        m
    }
}

/// Capacity of the target infrastructure, given in the quality model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfrastructureCapacity {
    pub memory_bytes: f64,
    pub compute_units: f64,
}

impl InfrastructureCapacity {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [("memory_bytes", self.memory_bytes), ("compute_units", self.compute_units)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("capacity {name} must be a nonnegative number"));
            }
        }
        Ok(())
    }
}

/// Human-readable binary size such as `8 GiB` or `1.5 MiB`.
pub fn format_bytes(bytes: f64) -> String {
    const UNITS: [(&str, f64); 4] = [
        ("TiB", 1_099_511_627_776.0),
        ("GiB", 1_073_741_824.0),
        ("MiB", 1_048_576.0),
        ("KiB", 1024.0),
    ];
    for (name, size) in UNITS {
        if bytes >= size {
            let v = (bytes / size * 100.0).round() / 100.0;
            return format!("{v} {name}");
        }
    }
    format!("{bytes} B")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suitability {
    pub suitable: bool,
    pub memory_sufficient: bool,
    pub compute_sufficient: bool,
    pub deficits: Vec<String>,
}

/// Whether the infrastructure meets every requirement of the model.
pub fn infrastructure_suitability(m: &ModelDescriptor, infra: &InfrastructureCapacity) -> Suitability {
    let req = &m.infrastructure_requirements;
    let mut deficits = Vec::new();
    let memory_sufficient = infra.memory_bytes >= req.min_memory_bytes;
    if !memory_sufficient {
        deficits.push(format!(
            "memory: need {}, have {}",
            format_bytes(req.min_memory_bytes),
            format_bytes(infra.memory_bytes)
        ));
    }
    let compute_sufficient = infra.compute_units >= req.min_compute_units;
    if !compute_sufficient {
        deficits.push(format!(
            "compute: need {} units, have {} units",
            req.min_compute_units, infra.compute_units
        ));
    }
    Suitability {
        suitable: memory_sufficient && compute_sufficient,
        memory_sufficient,
        compute_sufficient,
        deficits,
    }
}

impl From<Suitability> for Measurement {
    fn from(s: Suitability) -> Self {
        let mut m = Measurement::default()
            .with("suitable", s.suitable)
            .with("memory_sufficient", s.memory_sufficient)
            .with("compute_sufficient", s.compute_sufficient);
        m.findings.extend(s.deficits.into_iter().map(Finding::note));
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChecklistOutcome {
    pub pass: bool,
    /// Required items not answered yes or not-applicable, with the reason.
    pub open_items: Vec<(String, String)>,
}

/// Passes when every required item is answered yes or not applicable.
pub fn evaluate_checklist(items: &[ChecklistItemSpec], evidence: &[ChecklistEvidence]) -> Result<ChecklistOutcome> {
    let known: BTreeSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    if let Some(e) = evidence.iter().find(|e| !known.contains(e.item_id.as_str())) {
        return Err(Error::UnknownItemId(e.item_id.clone()));
    }
    let answers: BTreeMap<&str, &ChecklistEvidence> = evidence.iter().map(|e| (e.item_id.as_str(), e)).collect();
    let mut open_items = Vec::new();
    for item in items.iter().filter(|i| i.required) {
        match answers.get(item.id.as_str()) {
            None => open_items.push((item.id.clone(), "missing evidence".to_string())),
            Some(e) if e.status == EvidenceStatus::No => {
                let reason = if e.note.is_empty() {
                    "answered no".to_string()
                } else {
                    format!("answered no: {}", e.note)
                };
                open_items.push((item.id.clone(), reason));
            }
            Some(_) => {}
        }
    }
    Ok(ChecklistOutcome {
        pass: open_items.is_empty(),
        open_items,
    })
}

impl From<ChecklistOutcome> for Measurement {
    fn from(c: ChecklistOutcome) -> Self {
        let mut m = Measurement::default()
            .with("pass", c.pass)
            .with("open_items", c.open_items.len());
        m.findings
            .extend(c.open_items.into_iter().map(|(id, reason)| Finding::note(format!("{id}: {reason}"))));
        m
    }
}
