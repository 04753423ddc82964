//! Binds a tailored quality model to its inputs, computes one result per
//! attribute, renders reports and maps them to gate exit codes.

mod inputs;
mod report;
mod simulate;

pub use inputs::InputPaths;
pub use report::{
    gate, render_report, GateStatus, MetricResult, ModelInfo, QualityReport, ReportFormat, ReportSection,
    Status, Summary,
};
pub use simulate::{files, simulate_use_case, SimulationParams, SimulationSummary, CLASSES};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::dataio::{
    split_subsets, ChecklistEvidence, Dataset, EvidenceStatus, ModelDescriptor, Phase, PredictionTable,
    ResourceLog, RetrainKind, RetrainPredictionSet,
};
use crate::error::{Error, Result};
use crate::exec::{map_range, map_slice, ExecMode};
use crate::metrics::data::{self as dm, ConsistencyRule, NumericTest};
use crate::metrics::model::{self as mm, Robustness};
use crate::metrics::system::{self as sm, InfrastructureCapacity};
use crate::metrics::{Finding, Measurement, MetricValue};
use crate::qmodel::catalogue::{param_f64, param_str, param_usize, param_value};
use crate::qmodel::{AttributeKind, GroundTruth, InputKind, MetricSpec, QualityAttributeSpec, QualityModel};
use crate::reflearner::{inject_noise, run_kfold, run_loo, train, Learner, NoiseKind, NoiseSpec};

/// Everything an evaluation may read. Absent inputs make the attributes that
/// need them not evaluable.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub dev: Option<Dataset>,
    pub runtime: Option<Dataset>,
    pub predictions: Option<PredictionTable>,
    pub dev_predictions: Option<PredictionTable>,
    pub retrain: Vec<RetrainPredictionSet>,
    pub resource_log: Option<ResourceLog>,
    pub descriptor: Option<ModelDescriptor>,
    pub checklist: Option<Vec<ChecklistEvidence>>,
    pub scope_truth: Option<BTreeMap<String, bool>>,
    /// Content hashes of the input files, keyed by input name.
    pub digests: BTreeMap<String, String>,
}

impl Inputs {
    fn retrain_set(&self, kind: RetrainKind) -> Option<&RetrainPredictionSet> {
        self.retrain.iter().find(|r| r.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub seed: u64,
    pub mode: ExecMode,
}

/// FNV-1a, 64 bit.
fn fnv1a64(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed of one attribute: the root seed plus the FNV-1a hash of its id.
pub fn attribute_seed(root: u64, attribute_id: &str) -> u64 {
    root.wrapping_add(fnv1a64(attribute_id))
}

/// Rejects evidence for checklist items the model does not define.
pub fn check_evidence_ids(model: &QualityModel, evidence: &[ChecklistEvidence]) -> Result<()> {
    let known: BTreeSet<&str> = model
        .attributes
        .iter()
        .flat_map(|a| a.items())
        .map(|i| i.id.as_str())
        .collect();
    match evidence.iter().find(|e| !known.contains(e.item_id.as_str())) {
        Some(e) => Err(Error::UnknownItemId(e.item_id.clone())),
        None => Ok(()),
    }
}

/// Evaluates every attribute of `model`, in model order.
pub fn evaluate(model: &QualityModel, inputs: &Inputs, options: &EvalOptions) -> Result<QualityReport> {
    model.validate()?;
    if model.attributes.is_empty() {
        return Err(Error::EmptyModel);
    }
    let results = map_slice(options.mode, &model.attributes, |attr| {
        let ctx = Ctx {
            model,
            inputs,
            seed: attribute_seed(options.seed, &attr.id),
            mode: options.mode,
        };
        ctx.evaluate_attribute(attr)
    });
    Ok(QualityReport::assemble(model, results, options.seed, inputs.digests.clone()))
}

struct Ctx<'a> {
    model: &'a QualityModel,
    inputs: &'a Inputs,
    seed: u64,
    mode: ExecMode,
}

fn not_evaluable(attr: &QualityAttributeSpec, reason: String) -> MetricResult {
    MetricResult::new(attr, Status::NotEvaluable).reason(reason)
}

impl Ctx<'_> {
    fn evaluate_attribute(&self, attr: &QualityAttributeSpec) -> MetricResult {
        let missing: Vec<&str> = attr
            .required_inputs()
            .into_iter()
            .filter(|k| !self.available(*k, attr))
            .map(InputKind::label)
            .collect();
        if !missing.is_empty() {
            return not_evaluable(attr, format!("{} unavailable", missing.join(", ")));
        }
        let measurement = match &attr.metric {
            Some(spec) => match self.measure(spec) {
                Ok(m) => Some(m),
                Err(e) => return not_evaluable(attr, e.to_string()),
            },
            None => None,
        };
        match attr.kind {
            AttributeKind::Metric => {
                let spec = attr.metric.as_ref().expect("validated metric attribute");
                self.apply_threshold(attr, spec, measurement.unwrap_or_default())
            }
            AttributeKind::Checklist => self.checklist(attr, measurement),
        }
    }

    fn available(&self, kind: InputKind, attr: &QualityAttributeSpec) -> bool {
        let i = self.inputs;
        let spec = attr.metric.as_ref();
        let metric = spec.map_or("", |s| s.metric_id.as_str());
        let source = spec.and_then(|s| param_str(s, "source")).unwrap_or_else(|| "auto".into());
        let reference_ok = source != "retrain_dir" && i.dev.is_some();
        let supplied_ok = source != "reference_learner";
        match kind {
            InputKind::Labels => self.model.profile.ground_truth != GroundTruth::None,
            InputKind::DevelopmentData => i.dev.is_some(),
            InputKind::RuntimeData => i.runtime.is_some(),
            InputKind::Predictions => i.predictions.is_some(),
            InputKind::DevelopmentPredictions => i.dev_predictions.is_some(),
            InputKind::GroupColumn => match metric {
                "fairness_equalized_odds" => i.predictions.as_ref().is_some_and(PredictionTable::has_groups),
                _ => i.dev.as_ref().is_some_and(|d| d.manifest().group_column.is_some()),
            },
            InputKind::TimestampColumn => i.dev.as_ref().is_some_and(|d| d.manifest().timestamp_column.is_some()),
            InputKind::FoldPredictions => {
                reference_ok || (supplied_ok && i.retrain_set(RetrainKind::KFold).is_some())
            }
            InputKind::RetrainPredictions => {
                reference_ok
                    || (supplied_ok
                        && i.retrain_set(RetrainKind::LeaveOneOut).is_some_and(|r| r.full_model.is_some()))
            }
            InputKind::SupervisorFlags => i.predictions.as_ref().is_some_and(PredictionTable::has_supervisor_flags),
            InputKind::ContextFlags => i.predictions.as_ref().is_some_and(PredictionTable::has_context_flags),
            InputKind::ScopeTruth => i.scope_truth.is_some(),
            InputKind::ResourceLog => i.resource_log.is_some(),
            InputKind::ModelDescriptor => i.descriptor.is_some(),
            InputKind::ChecklistEvidence => {
                i.checklist.is_some() || attr.items().iter().all(|it| !it.required || it.evidence_key.is_some())
            }
        }
    }

    fn apply_threshold(&self, attr: &QualityAttributeSpec, spec: &MetricSpec, m: Measurement) -> MetricResult {
        let key = spec.primary_value();
        let Some(threshold) = &spec.threshold else {
            return MetricResult::new(attr, Status::Info).primary(&key).measurement(m);
        };
        let x = match m.get(&key) {
            Some(MetricValue::Bool(b)) => Some(f64::from(u8::from(*b))),
            Some(v) => v.as_f64().filter(|x| !x.is_nan()),
            None => None,
        };
        let result = MetricResult::new(attr, Status::Info)
            .primary(&key)
            .threshold(threshold.clone())
            .measurement(m);
        match x {
            None => MetricResult {
                status: Status::NotEvaluable,
                reason: Some(format!("{key} could not be computed")),
                ..result
            },
            Some(x) => MetricResult {
                status: if threshold.passes(x) { Status::Pass } else { Status::Fail },
                ..result
            },
        }
    }

    fn checklist(&self, attr: &QualityAttributeSpec, m: Option<Measurement>) -> MetricResult {
        let items = attr.items();
        let ids: BTreeSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
        let mut evidence: Vec<ChecklistEvidence> = self
            .inputs
            .checklist
            .iter()
            .flatten()
            .filter(|e| ids.contains(e.item_id.as_str()))
            .cloned()
            .collect();
        let metric_id = attr.metric.as_ref().map_or("", |s| s.metric_id.as_str());
        for item in items {
            let Some(key) = &item.evidence_key else { continue };
            let answer = m.as_ref().and_then(|m| m.get(key)).and_then(MetricValue::as_bool);
            if let Some(yes) = answer {
                evidence.retain(|e| e.item_id != item.id);
                let status = if yes { EvidenceStatus::Yes } else { EvidenceStatus::No };
                evidence.push(ChecklistEvidence::new(&item.id, status, &format!("from {metric_id}.{key}")));
            }
        }
        let outcome = match sm::evaluate_checklist(items, &evidence) {
            Ok(o) => o,
            Err(e) => return not_evaluable(attr, e.to_string()),
        };
        let status = if outcome.pass { Status::Pass } else { Status::Fail };
        let mut merged = Measurement::from(outcome);
        if let Some(m) = m {
            for (k, v) in m.values {
                merged.values.entry(k).or_insert(v);
            }
            merged.push_capped(m.findings);
        }
        MetricResult::new(attr, status).primary("pass").measurement(merged)
    }

    fn dev(&self) -> &Dataset {
        self.inputs.dev.as_ref().expect("availability checked")
    }

    fn runtime(&self) -> &Dataset {
        self.inputs.runtime.as_ref().expect("availability checked")
    }

    fn predictions(&self) -> &PredictionTable {
        self.inputs.predictions.as_ref().expect("availability checked")
    }

    fn descriptor(&self) -> &ModelDescriptor {
        self.inputs.descriptor.as_ref().expect("availability checked")
    }

    fn positive_class(&self, spec: &MetricSpec, datasets: &[Option<&Dataset>]) -> Result<String> {
        if let Some(p) = param_str(spec, "positive_class") {
            return Ok(p);
        }
        datasets
            .iter()
            .flatten()
            .find_map(|d| d.manifest().positive_class.clone())
            .ok_or_else(|| {
                Error::BadParameter("no positive class: set the positive_class parameter or manifest field".into())
            })
    }

    fn learner(&self, spec: &MetricSpec) -> Learner {
        let k = param_usize(spec, "knn_k").unwrap_or(5);
        Learner::from_param(&param_str(spec, "learner").unwrap_or_default(), k).unwrap_or(Learner::GaussianNb)
    }

    fn measure(&self, spec: &MetricSpec) -> Result<Measurement> {
        let z = || param_f64(spec, "z_threshold").unwrap_or(3.0);
        Ok(match spec.metric_id.as_str() {
            "model_type_appropriateness" => {
                mm::model_type_appropriateness(self.descriptor(), self.dev(), &self.model.profile).into()
            }
            "goodness_of_fit" => {
                let table = match param_str(spec, "phase").as_deref() {
                    Some("development") => self.inputs.dev_predictions.as_ref(),
                    _ => self.inputs.predictions.as_ref(),
                };
                mm::goodness_of_fit(table.expect("availability checked"))?.into()
            }
            "cv_goodness_variance" => self.cv_variance(spec)?,
            "robustness_ela" => self.robustness(spec)?,
            "loo_stability" => self.stability(spec)?,
            "fairness_equalized_odds" => {
                let positive = self.positive_class(spec, &[self.inputs.runtime.as_ref(), self.inputs.dev.as_ref()])?;
                mm::fairness_equalized_odds(self.predictions(), &positive)?.into()
            }
            "interpretability_complexity" => mm::interpretability_complexity(self.descriptor()),
            "resource_utilization" => mm::resource_utilization(self.descriptor()),
            "representativeness" => {
                let alpha = param_f64(spec, "alpha").unwrap_or(0.05);
                let test = match param_str(spec, "numeric_test").as_deref() {
                    Some("ks") => NumericTest::KolmogorovSmirnov,
                    _ => NumericTest::Welch,
                };
                dm::representativeness(self.dev(), self.runtime(), alpha, test)?.into()
            }
            "data_correctness" => dm::data_correctness(self.dev(), z(), self.mode)?.into(),
            "completeness" => dm::completeness(self.dev())?.into(),
            "currentness" => dm::currentness(self.dev())?.into(),
            "intra_consistency" => {
                let rules: Vec<ConsistencyRule> = param_value(spec, "rules")
                    .map(serde_json::from_value)
                    .transpose()
                    .map_err(|e| Error::BadParameter(e.to_string()))?
                    .unwrap_or_default();
                dm::intra_consistency(self.dev(), &rules)?.into()
            }
            "train_test_independence" => {
                let s = split_subsets(self.dev())?;
                let mut m: Measurement = dm::train_test_independence(&s.train, &s.test, self.mode)?.into();
                m.push_capped(s.warnings.into_iter().map(Finding::note));
                m
            }
            "balancedness" => {
                let vocabulary: Option<Vec<String>> = param_value(spec, "class_vocabulary")
                    .map(serde_json::from_value)
                    .transpose()
                    .map_err(|e| Error::BadParameter(e.to_string()))?;
                dm::balancedness(self.dev(), vocabulary.as_deref())?.into()
            }
            "absence_of_bias" => {
                let positive = self.positive_class(spec, &[self.inputs.dev.as_ref()])?;
                dm::absence_of_bias(self.dev(), &positive)?.into()
            }
            "inter_consistency" => dm::inter_consistency(self.dev(), self.runtime(), z())?.into(),
            "phase_efficiency" => {
                let name = param_str(spec, "phase").unwrap_or_default();
                let phase = Phase::parse(&name).ok_or_else(|| Error::BadParameter(format!("unknown phase {name}")))?;
                let log = self.inputs.resource_log.as_ref().expect("availability checked");
                sm::phase_efficiency(log, phase)?.into()
            }
            "scope_compliance" => {
                let k = param_usize(spec, "k").unwrap_or(5);
                let q = param_f64(spec, "quantile").unwrap_or(0.99);
                let profile = sm::build_scope_profile(self.dev(), k, q, self.mode)?;
                sm::scope_compliance(&profile, self.runtime(), self.mode)?.into()
            }
            "output_supervision_effectiveness" => sm::output_supervision_effectiveness(self.predictions())?.into(),
            "scope_supervision_effectiveness" => {
                let truth = self.inputs.scope_truth.as_ref().expect("availability checked");
                sm::scope_supervision_effectiveness(self.predictions(), truth)?.into()
            }
            "infrastructure_suitability" => {
                let capacity: InfrastructureCapacity =
                    serde_json::from_value(param_value(spec, "capacity").unwrap_or(Value::Null))
                        .map_err(|e| Error::BadParameter(format!("capacity: {e}")))?;
                sm::infrastructure_suitability(self.descriptor(), &capacity).into()
            }
            other => return Err(Error::BadParameter(format!("unknown metric {other}"))),
        })
    }

    fn cv_variance(&self, spec: &MetricSpec) -> Result<Measurement> {
        let source = param_str(spec, "source").unwrap_or_default();
        if source != "reference_learner" {
            if let Some(set) = self.inputs.retrain_set(RetrainKind::KFold) {
                return Ok(mm::cv_goodness_variance(set)?.into());
            }
        }
        let learner = self.learner(spec);
        let folds = param_usize(spec, "folds").unwrap_or(5);
        let (data, note) = match split_subsets(self.dev()) {
            Ok(s) if s.train.n_rows() > 0 => (s.train, "training subset"),
            _ => (self.dev().clone(), "development data"),
        };
        let set = run_kfold(learner, &data, folds, self.seed, self.mode)?;
        let mut m: Measurement = mm::cv_goodness_variance(&set)?.into();
        m.findings.push(Finding::note(format!(
            "reference learner {} with {folds} folds on the {note} ({} rows)",
            learner.name(),
            data.n_rows()
        )));
        Ok(m)
    }

    fn robustness(&self, spec: &MetricSpec) -> Result<Measurement> {
        let levels: Vec<f64> = param_value(spec, "noise_levels")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| Error::BadParameter(e.to_string()))?
            .unwrap_or_else(|| vec![0.1, 0.2, 0.3]);
        let kind = NoiseKind::from_param(&param_str(spec, "noise_kind").unwrap_or_default())
            .unwrap_or(NoiseKind::FeatureNoise);
        let learner = self.learner(spec);
        let (train_set, test_set, note) = reference_split(self.dev(), self.seed)?;
        let r = reference_robustness(learner, &train_set, &test_set, &levels, kind, self.seed, self.mode)?;
        let mut m: Measurement = r.into();
        m.findings.push(Finding::note(format!(
            "reference learner {} trained on {} rows, tested on {} rows ({note})",
            learner.name(),
            train_set.n_rows(),
            test_set.n_rows()
        )));
        Ok(m)
    }

    fn stability(&self, spec: &MetricSpec) -> Result<Measurement> {
        let source = param_str(spec, "source").unwrap_or_default();
        if source != "reference_learner" {
            let supplied = self.inputs.retrain_set(RetrainKind::LeaveOneOut);
            if let Some((set, full)) = supplied.and_then(|s| s.full_model.as_ref().map(|f| (s, f))) {
                return Ok(mm::loo_stability(set, full)?.into());
            }
        }
        let learner = self.learner(spec);
        let cap = param_usize(spec, "cap").unwrap_or(50);
        let (train_set, probe, note) = reference_split(self.dev(), self.seed)?;
        let out = run_loo(learner, &train_set, &probe, cap, self.seed, self.mode)?;
        let mut m: Measurement = mm::loo_stability(&out.set, &out.full_model)?.into();
        m.findings.push(Finding::note(format!(
            "reference learner {} retrained {} times leaving one of {} rows out; probe of {} rows ({note})",
            learner.name(),
            out.set.runs.len(),
            train_set.n_rows(),
            probe.n_rows()
        )));
        Ok(m)
    }
}

/// Training and test rows for reference-learner metrics: the subset column
/// when it yields both, else a seeded 70/30 split.
fn reference_split(dev: &Dataset, seed: u64) -> Result<(Dataset, Dataset, &'static str)> {
    if let Ok(s) = split_subsets(dev) {
        if s.train.n_rows() > 0 && s.test.n_rows() > 0 {
            return Ok((s.train, s.test, "subset column"));
        }
    }
    let n = dev.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, available: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64 * 0.7).round() as usize).clamp(1, n - 1);
    let (mut a, mut b) = (order[..cut].to_vec(), order[cut..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    Ok((dev.select_rows(&a), dev.select_rows(&b), "seeded 70/30 split"))
}

/// ELA of a reference learner: feature and missing-value noise perturb the
/// test rows; label noise perturbs the training labels before retraining.
pub fn reference_robustness(
    learner: Learner,
    train_set: &Dataset,
    test_set: &Dataset,
    levels: &[f64],
    kind: NoiseKind,
    seed: u64,
    mode: ExecMode,
) -> Result<Robustness> {
    let clean_model = train(learner, train_set)?;
    let clean = clean_model.predict(test_set)?;
    let noisy = map_range(mode, levels.len(), |i| -> Result<(f64, PredictionTable)> {
        let noise = NoiseSpec {
            kind,
            rate: levels[i],
            seed: seed.wrapping_add(i as u64 + 1),
        };
        let table = match kind {
            NoiseKind::LabelNoise => train(learner, &inject_noise(train_set, noise)?)?.predict(test_set)?,
            _ => clean_model.predict(&inject_noise(test_set, noise)?)?,
        };
        Ok((levels[i], table))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    mm::robustness_ela(&clean, &noisy)
}

#[cfg(test)]
mod tests;
