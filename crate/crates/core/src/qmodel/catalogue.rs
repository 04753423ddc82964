//! The closed catalogue of metric ids, their parameter schemas, the inputs
//! they consume, and the value each threshold is compared against.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::Value;

use super::MetricSpec;
use crate::metrics::data::ConsistencyRule;
use crate::metrics::system::InfrastructureCapacity;

/// Kinds of evaluation input an attribute may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Ground-truth labels; gated by the profile's ground-truth availability.
    Labels,
    DevelopmentData,
    RuntimeData,
    Predictions,
    DevelopmentPredictions,
    GroupColumn,
    TimestampColumn,
    FoldPredictions,
    RetrainPredictions,
    SupervisorFlags,
    ContextFlags,
    ScopeTruth,
    ResourceLog,
    ModelDescriptor,
    ChecklistEvidence,
}

impl InputKind {
    pub fn label(self) -> &'static str {
        match self {
            InputKind::Labels => "labels",
            InputKind::DevelopmentData => "development data",
            InputKind::RuntimeData => "runtime data",
            InputKind::Predictions => "runtime predictions",
            InputKind::DevelopmentPredictions => "development predictions",
            InputKind::GroupColumn => "group column",
            InputKind::TimestampColumn => "timestamp column",
            InputKind::FoldPredictions => "fold predictions",
            InputKind::RetrainPredictions => "retrain predictions",
            InputKind::SupervisorFlags => "supervisor flags",
            InputKind::ContextFlags => "context-change flags",
            InputKind::ScopeTruth => "scope ground truth",
            InputKind::ResourceLog => "resource log",
            InputKind::ModelDescriptor => "model descriptor",
            InputKind::ChecklistEvidence => "checklist evidence",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ParamKind {
    /// Finite number in `[min, max]`, or `(min, max)` when `open` is set.
    Number { min: f64, max: f64, open: bool },
    Integer { min: u64 },
    Choice(&'static [&'static str]),
    Text,
    /// Non-empty list of numbers in `[0, 1]`.
    RateList,
    TextList,
    Rules,
    Capacity,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub name: &'static str,
    pub kind: ParamKind,
    /// JSON literal of the default; `None` means the parameter is optional
    /// with no default.
    pub default: Option<&'static str>,
}

#[derive(Debug)]
pub struct MetricDef {
    pub id: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamDef],
    /// Values of this metric that are booleans and may answer checklist items.
    pub boolean_values: &'static [&'static str],
}

const fn p(name: &'static str, kind: ParamKind, default: Option<&'static str>) -> ParamDef {
    ParamDef {
        name,
        kind,
        default,
    }
}

const PROBABILITY: ParamKind = ParamKind::Number {
    min: 0.0,
    max: 1.0,
    open: true,
};
const POSITIVE: ParamKind = ParamKind::Number {
    min: 0.0,
    max: f64::INFINITY,
    open: true,
};
const SOURCE: ParamKind = ParamKind::Choice(&["auto", "retrain_dir", "reference_learner"]);
const LEARNER: ParamKind = ParamKind::Choice(&["gaussian_nb", "knn"]);
const PHASES: ParamKind =
    ParamKind::Choice(&["training", "execution", "output_supervision", "scope_supervision"]);

pub static CATALOGUE: &[MetricDef] = &[
    MetricDef {
        id: "model_type_appropriateness",
        description: "model descriptor task and column-type support versus the data",
        params: &[],
        boolean_values: &["compatible", "task_matches", "column_types_supported"],
    },
    MetricDef {
        id: "goodness_of_fit",
        description: "accuracy, per-class and macro precision/recall/F1",
        params: &[
            p("phase", ParamKind::Choice(&["development", "runtime"]), Some("\"runtime\"")),
            p(
                "measure",
                ParamKind::Choice(&["accuracy", "macro_precision", "macro_recall", "macro_f1"]),
                Some("\"accuracy\""),
            ),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "cv_goodness_variance",
        description: "sample variance of k-fold accuracies",
        params: &[
            p("source", SOURCE, Some("\"auto\"")),
            p("learner", LEARNER, Some("\"gaussian_nb\"")),
            p("folds", ParamKind::Integer { min: 2 }, Some("5")),
            p("knn_k", ParamKind::Integer { min: 1 }, Some("5")),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "robustness_ela",
        description: "equalized loss of accuracy under injected noise",
        params: &[
            p("noise_levels", ParamKind::RateList, Some("[0.1, 0.2, 0.3]")),
            p("noise_kind", ParamKind::Choice(&["feature", "label", "missing"]), Some("\"feature\"")),
            p("learner", LEARNER, Some("\"gaussian_nb\"")),
            p("knn_k", ParamKind::Integer { min: 1 }, Some("5")),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "loo_stability",
        description: "agreement of leave-one-out retrains with the full-data model",
        params: &[
            p("source", SOURCE, Some("\"auto\"")),
            p("learner", LEARNER, Some("\"gaussian_nb\"")),
            p("cap", ParamKind::Integer { min: 1 }, Some("50")),
            p("knn_k", ParamKind::Integer { min: 1 }, Some("5")),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "fairness_equalized_odds",
        description: "largest between-group TPR/FPR gap",
        params: &[p("positive_class", ParamKind::Text, None)],
        boolean_values: &[],
    },
    MetricDef {
        id: "interpretability_complexity",
        description: "parameter count and depth of the trained model",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "resource_utilization",
        description: "storage required by the trained model",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "representativeness",
        description: "per-column two-sample tests between development and runtime data",
        params: &[
            p("alpha", PROBABILITY, Some("0.05")),
            p("numeric_test", ParamKind::Choice(&["welch", "ks"]), Some("\"welch\"")),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "data_correctness",
        description: "z-score outliers in numeric columns",
        params: &[p("z_threshold", POSITIVE, Some("3.0"))],
        boolean_values: &[],
    },
    MetricDef {
        id: "completeness",
        description: "fraction of non-missing cells",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "currentness",
        description: "age of rows relative to the evaluation date",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "intra_consistency",
        description: "range, vocabulary and word-count rule violations",
        params: &[p("rules", ParamKind::Rules, Some("[]"))],
        boolean_values: &[],
    },
    MetricDef {
        id: "train_test_independence",
        description: "exact and near duplicates of test rows in the training subset",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "balancedness",
        description: "normalized label entropy and imbalance ratio",
        params: &[p("class_vocabulary", ParamKind::TextList, None)],
        boolean_values: &[],
    },
    MetricDef {
        id: "absence_of_bias",
        description: "largest between-group gap in positive-label rate",
        params: &[p("positive_class", ParamKind::Text, None)],
        boolean_values: &[],
    },
    MetricDef {
        id: "inter_consistency",
        description: "range mismatches, unseen categories and crosswise outliers",
        params: &[p("z_threshold", POSITIVE, Some("3.0"))],
        boolean_values: &[],
    },
    MetricDef {
        id: "phase_efficiency",
        description: "time, peak memory and energy logged for one phase",
        params: &[
            p("phase", PHASES, None),
            p("measure", ParamKind::Choice(&["time", "memory", "energy"]), Some("\"time\"")),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "scope_compliance",
        description: "runtime rows inside development ranges, vocabularies and k-NN radius",
        params: &[
            p("k", ParamKind::Integer { min: 1 }, Some("5")),
            p("quantile", PROBABILITY, Some("0.99")),
        ],
        boolean_values: &[],
    },
    MetricDef {
        id: "output_supervision_effectiveness",
        description: "error recall and false-alarm rate of the output supervisor",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "scope_supervision_effectiveness",
        description: "detection rate of the scope supervisor on annotated cases",
        params: &[],
        boolean_values: &[],
    },
    MetricDef {
        id: "infrastructure_suitability",
        description: "infrastructure capacity versus model requirements",
        params: &[p("capacity", ParamKind::Capacity, None)],
        boolean_values: &["suitable", "memory_sufficient", "compute_sufficient"],
    },
];

pub fn metric_def(id: &str) -> Option<&'static MetricDef> {
    CATALOGUE.iter().find(|d| d.id == id)
}

pub fn metric_ids() -> impl Iterator<Item = &'static str> {
    CATALOGUE.iter().map(|d| d.id)
}

/// Parameters that must be given explicitly (no default, not optional).
fn mandatory(metric_id: &str) -> &'static [&'static str] {
    match metric_id {
        "phase_efficiency" => &["phase"],
        "infrastructure_suitability" => &["capacity"],
        _ => &[],
    }
}

pub(crate) fn validate_metric(spec: &MetricSpec) -> Result<(), String> {
    let Some(def) = metric_def(&spec.metric_id) else {
        let valid: Vec<&str> = metric_ids().collect();
        return Err(format!(
            "unknown metric_id \"{}\"; valid ids: {}",
            spec.metric_id,
            valid.join(", ")
        ));
    };
    for (name, value) in &spec.params {
        let Some(param) = def.params.iter().find(|p| p.name == name) else {
            return Err(format!("metric {} has no parameter \"{name}\"", def.id));
        };
        check_param(param, value).map_err(|e| format!("parameter \"{name}\": {e}"))?;
    }
    for name in mandatory(def.id) {
        if !spec.params.contains_key(*name) {
            return Err(format!("metric {} requires parameter \"{name}\"", def.id));
        }
    }
    if let Some(t) = &spec.threshold {
        t.validate()?;
    }
    Ok(())
}

fn check_param(def: &ParamDef, value: &Value) -> Result<(), String> {
    match def.kind {
        ParamKind::Number { min, max, open } => {
            let x = value.as_f64().ok_or("expected a number")?;
            let inside = if open {
                x > min && x < max
            } else {
                x >= min && x <= max
            };
            if !x.is_finite() || !inside {
                let (l, r) = if open { ('(', ')') } else { ('[', ']') };
                return Err(format!("{x} outside {l}{min}, {max}{r}"));
            }
        }
        ParamKind::Integer { min } => {
            let x = value.as_u64().ok_or("expected a non-negative integer")?;
            if x < min {
                return Err(format!("{x} is below the minimum {min}"));
            }
        }
        ParamKind::Choice(choices) => {
            let s = value.as_str().ok_or("expected a string")?;
            if !choices.contains(&s) {
                return Err(format!("\"{s}\" is not one of {}", choices.join(", ")));
            }
        }
        ParamKind::Text => {
            value.as_str().ok_or("expected a string")?;
        }
        ParamKind::RateList => {
            let items = value.as_array().ok_or("expected a list of numbers")?;
            if items.is_empty() {
                return Err("list must not be empty".into());
            }
            for item in items {
                let x = item.as_f64().ok_or("expected a list of numbers")?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(format!("{x} outside [0, 1]"));
                }
            }
        }
        ParamKind::TextList => {
            let items = value.as_array().ok_or("expected a list of strings")?;
            if items.iter().any(|v| !v.is_string()) {
                return Err("expected a list of strings".into());
            }
        }
        ParamKind::Rules => {
            let rules: Vec<ConsistencyRule> =
                serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
            for rule in &rules {
                rule.validate()?;
            }
        }
        ParamKind::Capacity => {
            serde_json::from_value::<InfrastructureCapacity>(value.clone())
                .map_err(|e| e.to_string())?
                .validate()?;
        }
    }
    Ok(())
}

/// Parameter value with the catalogue default applied.
pub fn param_value(spec: &MetricSpec, name: &str) -> Option<Value> {
    if let Some(v) = spec.params.get(name) {
        return Some(v.clone());
    }
    let def = metric_def(&spec.metric_id)?;
    let param = def.params.iter().find(|p| p.name == name)?;
    param
        .default
        .map(|lit| serde_json::from_str(lit).expect("catalogue defaults are valid JSON"))
}

pub(crate) fn param_str(spec: &MetricSpec, name: &str) -> Option<String> {
    param_value(spec, name).and_then(|v| v.as_str().map(str::to_string))
}

pub(crate) fn param_f64(spec: &MetricSpec, name: &str) -> Option<f64> {
    param_value(spec, name).and_then(|v| v.as_f64())
}

pub(crate) fn param_usize(spec: &MetricSpec, name: &str) -> Option<usize> {
    param_value(spec, name).and_then(|v| v.as_u64()).map(|v| v as usize)
}

pub(crate) fn required_inputs(spec: &MetricSpec) -> BTreeSet<InputKind> {
    use InputKind::*;
    let inputs: &[InputKind] = match spec.metric_id.as_str() {
        "model_type_appropriateness" => &[ModelDescriptor, DevelopmentData],
        "goodness_of_fit" => match param_str(spec, "phase").as_deref() {
            Some("development") => &[Labels, DevelopmentPredictions],
            _ => &[Labels, Predictions],
        },
        "cv_goodness_variance" => &[Labels, FoldPredictions],
        "robustness_ela" => &[Labels, DevelopmentData],
        "loo_stability" => &[RetrainPredictions],
        "fairness_equalized_odds" => &[Labels, Predictions, GroupColumn],
        "interpretability_complexity" | "resource_utilization" => &[ModelDescriptor],
        "representativeness" | "inter_consistency" | "scope_compliance" => {
            &[DevelopmentData, RuntimeData]
        }
        "data_correctness" | "completeness" | "intra_consistency" | "train_test_independence" => {
            &[DevelopmentData]
        }
        "currentness" => &[DevelopmentData, TimestampColumn],
        "balancedness" => &[Labels, DevelopmentData],
        "absence_of_bias" => &[Labels, DevelopmentData, GroupColumn],
        "phase_efficiency" => &[ResourceLog],
        "output_supervision_effectiveness" => &[Labels, Predictions, SupervisorFlags],
        "scope_supervision_effectiveness" => &[Predictions, ContextFlags, ScopeTruth],
        "infrastructure_suitability" => &[ModelDescriptor],
        _ => &[],
    };
    inputs.iter().copied().collect()
}

pub(crate) fn primary_value(spec: &MetricSpec) -> String {
    let key = match spec.metric_id.as_str() {
        "model_type_appropriateness" => "compatible",
        "goodness_of_fit" => return param_str(spec, "measure").unwrap_or_default(),
        "cv_goodness_variance" => "variance",
        "robustness_ela" => "ela_max",
        "loo_stability" => "stability",
        "fairness_equalized_odds" => "eo_gap",
        "interpretability_complexity" => "n_parameters",
        "resource_utilization" => "storage_bytes",
        "representativeness" => "flagged_count",
        "data_correctness" => "outlier_fraction",
        "completeness" => "completeness",
        "currentness" => "median_age_days",
        "intra_consistency" => "violation_count",
        "train_test_independence" => "exact_overlap",
        "balancedness" => "normalized_entropy",
        "absence_of_bias" => "max_positive_rate_gap",
        "inter_consistency" => "crosswise_outlier_fraction",
        "phase_efficiency" => match param_str(spec, "measure").as_deref() {
            Some("memory") => "peak_memory_bytes",
            Some("energy") => "total_energy_joules",
            _ => "total_time_s",
        },
        "scope_compliance" => "in_scope_fraction",
        "output_supervision_effectiveness" => "error_recall",
        "scope_supervision_effectiveness" => "detection_rate",
        "infrastructure_suitability" => "suitable",
        _ => "",
    };
    key.to_string()
}
