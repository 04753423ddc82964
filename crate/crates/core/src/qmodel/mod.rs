//! Quality-model schema: views, measurement objects, attributes, metric specs
//! and thresholds, plus loading, validation and tailoring.

mod builtin;
pub mod catalogue;
mod tailor;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_string;
use crate::error::{Error, Result};

pub use builtin::builtin_default_model;
pub use catalogue::{metric_def, InputKind, MetricDef, ParamKind};
pub use tailor::tailor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Model,
    Data,
    System,
    Infrastructure,
    Environment,
}

impl ViewKind {
    pub const ALL: [ViewKind; 5] = [
        ViewKind::Model,
        ViewKind::Data,
        ViewKind::System,
        ViewKind::Infrastructure,
        ViewKind::Environment,
    ];

    /// Section order used by reports.
    pub const REPORT_ORDER: [ViewKind; 5] = [
        ViewKind::Model,
        ViewKind::Data,
        ViewKind::Environment,
        ViewKind::System,
        ViewKind::Infrastructure,
    ];

    pub fn objects(self) -> impl Iterator<Item = MeasurementObjectKind> {
        MeasurementObjectKind::ALL
            .into_iter()
            .filter(move |o| o.view() == self)
    }

    pub fn label(self) -> &'static str {
        match self {
            ViewKind::Model => "Model",
            ViewKind::Data => "Data",
            ViewKind::System => "System",
            ViewKind::Infrastructure => "Infrastructure",
            ViewKind::Environment => "Environment",
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementObjectKind {
    ModelType,
    TrainedModel,
    DevelopmentData,
    RuntimeData,
    DevelopmentAndRuntimeData,
    TrainingProcess,
    Society,
    Scope,
    OutputSupervision,
    ScopeSupervision,
    #[serde(rename = "non_ml_components")]
    NonMLComponents,
    Infrastructure,
    TrainingAlgorithm,
    ExecutionAlgorithm,
}

impl MeasurementObjectKind {
    pub const ALL: [MeasurementObjectKind; 14] = [
        MeasurementObjectKind::ModelType,
        MeasurementObjectKind::TrainedModel,
        MeasurementObjectKind::DevelopmentData,
        MeasurementObjectKind::RuntimeData,
        MeasurementObjectKind::DevelopmentAndRuntimeData,
        MeasurementObjectKind::TrainingProcess,
        MeasurementObjectKind::Society,
        MeasurementObjectKind::Scope,
        MeasurementObjectKind::OutputSupervision,
        MeasurementObjectKind::ScopeSupervision,
        MeasurementObjectKind::NonMLComponents,
        MeasurementObjectKind::Infrastructure,
        MeasurementObjectKind::TrainingAlgorithm,
        MeasurementObjectKind::ExecutionAlgorithm,
    ];

    pub fn view(self) -> ViewKind {
        use MeasurementObjectKind::*;
        match self {
            ModelType | TrainedModel => ViewKind::Model,
            DevelopmentData | RuntimeData | DevelopmentAndRuntimeData => ViewKind::Data,
            TrainingProcess | Society => ViewKind::Environment,
            Scope | OutputSupervision | ScopeSupervision => ViewKind::System,
            NonMLComponents | Infrastructure | TrainingAlgorithm | ExecutionAlgorithm => {
                ViewKind::Infrastructure
            }
        }
    }

    pub fn label(self) -> &'static str {
        use MeasurementObjectKind::*;
        match self {
            ModelType => "Model type",
            TrainedModel => "Trained model",
            DevelopmentData => "Development data",
            RuntimeData => "Runtime data",
            DevelopmentAndRuntimeData => "Development and runtime data",
            TrainingProcess => "Training process",
            Society => "Society",
            Scope => "Scope",
            OutputSupervision => "Output supervision",
            ScopeSupervision => "Scope supervision",
            NonMLComponents => "Other non-ML components",
            Infrastructure => "Infrastructure",
            TrainingAlgorithm => "Training algorithm",
            ExecutionAlgorithm => "Execution algorithm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Metric,
    Checklist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluability {
    #[default]
    Unconditional,
    /// Needs labels that the tailoring profile says may be missing; the
    /// evaluator decides at run time.
    Conditional,
}

impl Evaluability {
    fn is_unconditional(&self) -> bool {
        *self == Evaluability::Unconditional
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "within")]
    Within,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdValue {
    Scalar(f64),
    Range([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    pub comparator: Comparator,
    pub value: ThresholdValue,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub direction_note: String,
}

impl Threshold {
    pub fn new(comparator: Comparator, value: f64) -> Self {
        Threshold {
            comparator,
            value: ThresholdValue::Scalar(value),
            direction_note: String::new(),
        }
    }

    pub fn within(low: f64, high: f64) -> Self {
        Threshold {
            comparator: Comparator::Within,
            value: ThresholdValue::Range([low, high]),
            direction_note: String::new(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match (self.comparator, self.value) {
            (Comparator::Within, ThresholdValue::Range([lo, hi])) => {
                if !(lo <= hi) {
                    return Err(format!("within-range threshold has low {lo} > high {hi}"));
                }
                Ok(())
            }
            (Comparator::Within, ThresholdValue::Scalar(_)) => {
                Err("within-range threshold needs a [low, high] value".into())
            }
            (_, ThresholdValue::Range(_)) => {
                Err("only the within comparator accepts a [low, high] value".into())
            }
            (_, ThresholdValue::Scalar(v)) if !v.is_finite() => {
                Err("threshold value must be finite".into())
            }
            _ => Ok(()),
        }
    }

    /// Applies the comparator to `x` with exact floating-point semantics.
    pub fn passes(&self, x: f64) -> bool {
        match (self.comparator, self.value) {
            (Comparator::Within, ThresholdValue::Range([lo, hi])) => lo <= x && x <= hi,
            (_, ThresholdValue::Range(_)) | (Comparator::Within, _) => false,
            (Comparator::Le, ThresholdValue::Scalar(v)) => x <= v,
            (Comparator::Ge, ThresholdValue::Scalar(v)) => x >= v,
            (Comparator::Lt, ThresholdValue::Scalar(v)) => x < v,
            (Comparator::Gt, ThresholdValue::Scalar(v)) => x > v,
            (Comparator::Eq, ThresholdValue::Scalar(v)) => x == v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub metric_id: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
}

impl MetricSpec {
    pub fn new(metric_id: &str) -> Self {
        MetricSpec {
            metric_id: metric_id.to_string(),
            params: BTreeMap::new(),
            threshold: None,
        }
    }

    pub fn param(mut self, name: &str, value: serde_json::Value) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn threshold(mut self, threshold: Threshold) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn def(&self) -> Option<&'static MetricDef> {
        metric_def(&self.metric_id)
    }

    /// Input kinds this metric needs, resolved against its parameters.
    pub fn required_inputs(&self) -> BTreeSet<InputKind> {
        catalogue::required_inputs(self)
    }

    /// Name of the value the threshold is compared against.
    pub fn primary_value(&self) -> String {
        catalogue::primary_value(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecklistItemSpec {
    pub id: String,
    pub text: String,
    pub required: bool,
    /// Name of a boolean value produced by the attribute's metric that answers
    /// this item automatically when the metric can be computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_key: Option<String>,
}

impl ChecklistItemSpec {
    pub fn manual(id: &str, text: &str, required: bool) -> Self {
        ChecklistItemSpec {
            id: id.to_string(),
            text: text.to_string(),
            required,
            evidence_key: None,
        }
    }

    pub fn automated(id: &str, text: &str, key: &str) -> Self {
        ChecklistItemSpec {
            id: id.to_string(),
            text: text.to_string(),
            required: true,
            evidence_key: Some(key.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityAttributeSpec {
    pub id: String,
    pub view: ViewKind,
    pub object: MeasurementObjectKind,
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checklist_items: Option<Vec<ChecklistItemSpec>>,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Evaluability::is_unconditional")]
    pub evaluability: Evaluability,
}

impl QualityAttributeSpec {
    pub fn required_inputs(&self) -> BTreeSet<InputKind> {
        let mut inputs = self
            .metric
            .as_ref()
            .map(MetricSpec::required_inputs)
            .unwrap_or_default();
        if self.kind == AttributeKind::Checklist {
            inputs.insert(InputKind::ChecklistEvidence);
        }
        inputs
    }

    pub fn items(&self) -> &[ChecklistItemSpec] {
        self.checklist_items.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    Full,
    Partial,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
    Clustering,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailoringProfile {
    pub ground_truth: GroundTruth,
    pub task: Task,
    pub selected_views: BTreeSet<ViewKind>,
    pub selected_objects: BTreeSet<MeasurementObjectKind>,
}

impl TailoringProfile {
    /// Every view and object selected.
    pub fn full(ground_truth: GroundTruth, task: Task) -> Self {
        TailoringProfile {
            ground_truth,
            task,
            selected_views: ViewKind::ALL.into_iter().collect(),
            selected_objects: MeasurementObjectKind::ALL.into_iter().collect(),
        }
    }

    /// Selects the given views and all of their objects.
    pub fn for_views(ground_truth: GroundTruth, task: Task, views: &[ViewKind]) -> Self {
        TailoringProfile {
            ground_truth,
            task,
            selected_views: views.iter().copied().collect(),
            selected_objects: views.iter().flat_map(|v| v.objects()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(o) = self
            .selected_objects
            .iter()
            .find(|o| !self.selected_views.contains(&o.view()))
        {
            return Err(Error::Schema(format!(
                "profile selects object {:?} whose view {} is not selected",
                o,
                o.view()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityModel {
    pub name: String,
    pub version: String,
    pub profile: TailoringProfile,
    pub attributes: Vec<QualityAttributeSpec>,
}

impl QualityModel {
    pub fn attribute(&self, id: &str) -> Option<&QualityAttributeSpec> {
        self.attributes.iter().find(|a| a.id == id)
    }

    /// Checks every structural invariant of the model and its metric params.
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        let mut ids = HashSet::new();
        let mut item_ids = HashSet::new();
        for attr in &self.attributes {
            if !ids.insert(attr.id.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute id \"{}\"", attr.id)));
            }
            if attr.object.view() != attr.view {
                return Err(Error::Schema(format!(
                    "attribute \"{}\": object {:?} belongs to view {}, not {}",
                    attr.id,
                    attr.object,
                    attr.object.view(),
                    attr.view
                )));
            }
            if let Some(metric) = &attr.metric {
                catalogue::validate_metric(metric)
                    .map_err(|e| Error::Schema(format!("attribute \"{}\": {e}", attr.id)))?;
            }
            match attr.kind {
                AttributeKind::Metric => {
                    if attr.metric.is_none() {
                        return Err(Error::Schema(format!(
                            "metric attribute \"{}\" has no metric",
                            attr.id
                        )));
                    }
                    if attr.checklist_items.is_some() {
                        return Err(Error::Schema(format!(
                            "metric attribute \"{}\" must not carry checklist items",
                            attr.id
                        )));
                    }
                }
                AttributeKind::Checklist => {
                    if attr.items().is_empty() {
                        return Err(Error::Schema(format!(
                            "checklist attribute \"{}\" has no items",
                            attr.id
                        )));
                    }
                    for item in attr.items() {
                        if !item_ids.insert(item.id.as_str()) {
                            return Err(Error::Schema(format!(
                                "duplicate checklist item id \"{}\"",
                                item.id
                            )));
                        }
                        if let Some(key) = &item.evidence_key {
                            let def = attr.metric.as_ref().and_then(MetricSpec::def);
                            let ok = def.is_some_and(|d| d.boolean_values.contains(&key.as_str()));
                            if !ok {
                                return Err(Error::Schema(format!(
                                    "checklist item \"{}\": evidence_key \"{key}\" is not a \
                                     boolean value of the attribute's metric",
                                    item.id
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses and validates a model from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: QualityModel = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        model.validate()?;
        Ok(model)
    }

    /// Canonical JSON form; `from_json(to_canonical_json(m))` reproduces `m`.
    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self).expect("quality model is always serializable")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json()).map_err(|e| Error::io(path, e))
    }
}

/// Reads, parses and validates a quality-model config file.
pub fn load_quality_model(path: &Path) -> Result<QualityModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    QualityModel::from_json(&text)
}
