use serde_json::json;

use super::{
    AttributeKind, ChecklistItemSpec, Comparator, Evaluability, GroundTruth,
    MeasurementObjectKind as Obj, MetricSpec, QualityAttributeSpec, QualityModel,
    TailoringProfile, Task, Threshold,
};

fn metric(id: &str, object: Obj, name: &str, spec: MetricSpec) -> QualityAttributeSpec {
    QualityAttributeSpec {
        id: id.to_string(),
        view: object.view(),
        object,
        name: name.to_string(),
        kind: AttributeKind::Metric,
        metric: Some(spec),
        checklist_items: None,
        required: true,
        evaluability: Evaluability::Unconditional,
    }
}

fn checklist(
    id: &str,
    object: Obj,
    name: &str,
    automation: Option<MetricSpec>,
    items: Vec<ChecklistItemSpec>,
) -> QualityAttributeSpec {
    QualityAttributeSpec {
        id: id.to_string(),
        view: object.view(),
        object,
        name: name.to_string(),
        kind: AttributeKind::Checklist,
        metric: automation,
        checklist_items: Some(items),
        required: true,
        evaluability: Evaluability::Unconditional,
    }
}

fn at_least(v: f64) -> Threshold {
    Threshold::new(Comparator::Ge, v)
}

fn at_most(v: f64) -> Threshold {
    Threshold::new(Comparator::Le, v)
}

fn phase(phase: &str) -> MetricSpec {
    MetricSpec::new("phase_efficiency").param("phase", json!(phase))
}

/// The default quality model for a classification component with output and
/// scope supervision: one attribute per quality attribute of the reference
/// model, grouped by view.
///
/// Thresholds are starting points meant to be edited per use case.
pub fn builtin_default_model() -> QualityModel {
    let attributes = vec![
        // model view
        checklist(
            "appropriateness",
            Obj::ModelType,
            "Appropriateness",
            Some(MetricSpec::new("model_type_appropriateness")),
            vec![
                ChecklistItemSpec::automated(
                    "appropriateness.task",
                    "The model type performs the task the component is built for.",
                    "task_matches",
                ),
                ChecklistItemSpec::automated(
                    "appropriateness.column_types",
                    "The model type can handle every column type of the data.",
                    "column_types_supported",
                ),
            ],
        ),
        metric(
            "dev_goodness_of_fit",
            Obj::TrainedModel,
            "Development correctness (Goodness of Fit)",
            MetricSpec::new("goodness_of_fit")
                .param("phase", json!("development"))
                .threshold(at_least(0.8)),
        ),
        metric(
            "runtime_goodness_of_fit",
            Obj::TrainedModel,
            "Runtime correctness (Goodness of Fit)",
            MetricSpec::new("goodness_of_fit")
                .param("phase", json!("runtime"))
                .threshold(at_least(0.8)),
        ),
        metric(
            "relevance",
            Obj::TrainedModel,
            "Relevance (Bias-Variance tradeoff)",
            MetricSpec::new("cv_goodness_variance").threshold(at_most(0.0025)),
        ),
        metric(
            "robustness",
            Obj::TrainedModel,
            "Robustness",
            MetricSpec::new("robustness_ela").threshold(at_most(0.5)),
        ),
        metric(
            "stability",
            Obj::TrainedModel,
            "Stability",
            MetricSpec::new("loo_stability").threshold(at_least(0.9)),
        ),
        metric(
            "fairness",
            Obj::TrainedModel,
            "Fairness",
            MetricSpec::new("fairness_equalized_odds").threshold(at_most(0.15)),
        ),
        metric(
            "interpretability",
            Obj::TrainedModel,
            "Interpretability",
            MetricSpec::new("interpretability_complexity").threshold(at_most(10_000.0)),
        ),
        metric(
            "resource_utilization",
            Obj::TrainedModel,
            "Resource utilization",
            MetricSpec::new("resource_utilization").threshold(at_most(104_857_600.0)),
        ),
        // data view
        metric(
            "representativeness",
            Obj::DevelopmentData,
            "Representativeness",
            MetricSpec::new("representativeness").threshold(at_most(0.0)),
        ),
        metric(
            "data_correctness",
            Obj::DevelopmentData,
            "Correctness",
            MetricSpec::new("data_correctness").threshold(at_most(0.01)),
        ),
        metric(
            "completeness",
            Obj::DevelopmentData,
            "Completeness",
            MetricSpec::new("completeness").threshold(at_least(0.95)),
        ),
        metric(
            "currentness",
            Obj::DevelopmentData,
            "Currentness",
            MetricSpec::new("currentness").threshold(at_most(365.0)),
        ),
        metric(
            "intra_consistency",
            Obj::DevelopmentData,
            "Intra-Consistency",
            MetricSpec::new("intra_consistency").threshold(at_most(0.0)),
        ),
        metric(
            "train_test_independence",
            Obj::DevelopmentData,
            "Train/Test Independence",
            MetricSpec::new("train_test_independence").threshold(at_most(0.01)),
        ),
        metric(
            "balancedness",
            Obj::DevelopmentData,
            "Balancedness",
            MetricSpec::new("balancedness").threshold(at_least(0.5)),
        ),
        metric(
            "absence_of_bias",
            Obj::DevelopmentData,
            "Absence of Bias",
            MetricSpec::new("absence_of_bias").threshold(at_most(0.2)),
        ),
        metric(
            "inter_consistency",
            Obj::DevelopmentAndRuntimeData,
            "Inter-Consistency",
            MetricSpec::new("inter_consistency").threshold(at_most(0.05)),
        ),
        // environment view
        metric(
            "environmental_impact",
            Obj::TrainingProcess,
            "Environmental Impact",
            phase("training").param("measure", json!("energy")),
        ),
        checklist(
            "social_impact",
            Obj::Society,
            "Social Impact",
            None,
            vec![
                ChecklistItemSpec::manual(
                    "social_impact.employees",
                    "The impact of the component on employees has been assessed and communicated.",
                    true,
                ),
                ChecklistItemSpec::manual(
                    "social_impact.discrimination",
                    "Affected groups were checked for discriminatory effects of automated decisions.",
                    false,
                ),
            ],
        ),
        // system view
        metric(
            "scope_compliance",
            Obj::Scope,
            "Scope Compliance",
            MetricSpec::new("scope_compliance").threshold(at_least(0.95)),
        ),
        metric(
            "output_supervision_effectiveness",
            Obj::OutputSupervision,
            "Output Supervision Effectiveness",
            MetricSpec::new("output_supervision_effectiveness").threshold(at_least(0.8)),
        ),
        metric(
            "output_supervision_overhead",
            Obj::OutputSupervision,
            "Output Supervision Overhead / Efficiency",
            phase("output_supervision"),
        ),
        metric(
            "scope_supervision_effectiveness",
            Obj::ScopeSupervision,
            "Scope Supervision Effectiveness",
            MetricSpec::new("scope_supervision_effectiveness").threshold(at_least(0.8)),
        ),
        metric(
            "scope_supervision_overhead",
            Obj::ScopeSupervision,
            "Scope Supervision Overhead / Efficiency",
            phase("scope_supervision"),
        ),
        // infrastructure view
        checklist(
            "non_ml_components",
            Obj::NonMLComponents,
            "Quality of non-ML components (ISO/IEC 25010 subset)",
            None,
            vec![
                ChecklistItemSpec::manual(
                    "non_ml.subset_selected",
                    "The relevant ISO/IEC 25010 characteristics for the non-ML components are selected.",
                    true,
                ),
                ChecklistItemSpec::manual(
                    "non_ml.subset_assessed",
                    "Each selected characteristic has been assessed for the non-ML components.",
                    true,
                ),
            ],
        ),
        checklist(
            "infrastructure_suitability",
            Obj::Infrastructure,
            "Infrastructure Suitability",
            Some(MetricSpec::new("infrastructure_suitability").param(
                "capacity",
                json!({"memory_bytes": 17_179_869_184u64, "compute_units": 8}),
            )),
            vec![
                ChecklistItemSpec::automated(
                    "infrastructure.memory",
                    "Available memory and storage meet the model's requirements.",
                    "memory_sufficient",
                ),
                ChecklistItemSpec::automated(
                    "infrastructure.compute",
                    "Available compute meets the model's requirements.",
                    "compute_sufficient",
                ),
            ],
        ),
        metric(
            "training_efficiency",
            Obj::TrainingAlgorithm,
            "Training Efficiency",
            phase("training"),
        ),
        metric(
            "execution_efficiency",
            Obj::ExecutionAlgorithm,
            "Execution Efficiency",
            phase("execution"),
        ),
    ];

    QualityModel {
        name: "ml-quality-model".to_string(),
        version: "1.0.0".to_string(),
        profile: TailoringProfile::full(GroundTruth::Full, Task::Classification),
        attributes,
    }
}
