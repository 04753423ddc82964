use std::sync::OnceLock;

use proptest::prelude::*;
use tempfile::TempDir;

use super::*;
use crate::dataio::{PredictionRow, RetrainRun};
use crate::qmodel::{
    builtin_default_model, Comparator, MeasurementObjectKind as Obj, TailoringProfile, Task, Threshold, ViewKind,
};

struct Fixture {
    _dir: TempDir,
    inputs: Inputs,
}

fn params() -> SimulationParams {
    SimulationParams {
        seed: 7,
        n_dev: 300,
        n_runtime: 200,
        ..SimulationParams::default()
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        simulate_use_case(&params(), dir.path()).unwrap();
        let inputs = InputPaths::simulated(dir.path()).load().unwrap();
        Fixture { _dir: dir, inputs }
    })
}

fn opts() -> EvalOptions {
    EvalOptions { seed: 11, mode: ExecMode::Parallel }
}

fn metric_attr(id: &str, spec: MetricSpec) -> QualityAttributeSpec {
    QualityAttributeSpec {
        id: id.into(),
        view: ViewKind::Data,
        object: Obj::DevelopmentData,
        name: id.into(),
        kind: AttributeKind::Metric,
        metric: Some(spec),
        checklist_items: None,
        required: true,
        evaluability: Default::default(),
    }
}

fn small_model(attributes: Vec<QualityAttributeSpec>) -> QualityModel {
    QualityModel {
        name: "small".into(),
        version: "0".into(),
        profile: TailoringProfile::full(GroundTruth::Full, Task::Classification),
        attributes,
    }
}

#[test]
fn fnv_reference_values() {
    assert_eq!(fnv1a64(""), 0xcbf2_9ce4_8422_2325);
    assert_eq!(fnv1a64("a"), 0xaf63_dc4c_8601_ec8c);
    assert_eq!(attribute_seed(u64::MAX, ""), 0xcbf2_9ce4_8422_2324);
}

#[test]
fn every_attribute_has_one_result_in_view_order() {
    let model = builtin_default_model();
    let report = evaluate(&model, &fixture().inputs, &opts()).unwrap();
    let ids: Vec<&str> = report.results().map(|r| r.attribute_id.as_str()).collect();
    assert_eq!(ids.len(), model.attributes.len());
    let views: Vec<ViewKind> = report.sections.iter().map(|s| s.view).collect();
    assert_eq!(views, ViewKind::REPORT_ORDER);
    for view in ViewKind::REPORT_ORDER {
        let expected: Vec<&str> = model.attributes.iter().filter(|a| a.view == view).map(|a| a.id.as_str()).collect();
        let got: Vec<&str> = report.results().filter(|r| r.view == view).map(|r| r.attribute_id.as_str()).collect();
        assert_eq!(got, expected);
    }
    let s = report.summary;
    assert_eq!(s.n_pass + s.n_fail + s.n_info + s.n_not_evaluable, model.attributes.len());
}

#[test]
fn full_simulated_inputs_evaluate_everything() {
    let report = evaluate(&builtin_default_model(), &fixture().inputs, &opts()).unwrap();
    let stuck: Vec<_> = report
        .results()
        .filter(|r| r.status == Status::NotEvaluable)
        .map(|r| (r.attribute_id.clone(), r.reason.clone()))
        .collect();
    assert!(stuck.is_empty(), "{stuck:?}");
    let model = builtin_default_model();
    for r in report.results() {
        let checklist = model.attribute(&r.attribute_id).unwrap().kind == AttributeKind::Checklist;
        if matches!(r.status, Status::Pass | Status::Fail) {
            assert!(r.threshold_applied.is_some() || checklist, "{}", r.attribute_id);
        }
    }
}

#[test]
fn parallel_and_sequential_reports_match() {
    let model = builtin_default_model();
    let a = evaluate(&model, &fixture().inputs, &opts()).unwrap();
    let b = evaluate(&model, &fixture().inputs, &EvalOptions { mode: ExecMode::Sequential, ..opts() }).unwrap();
    assert_eq!(render_report(&a, ReportFormat::Json), render_report(&b, ReportFormat::Json));
}

#[test]
fn no_ground_truth_blocks_label_metrics() {
    let mut model = builtin_default_model();
    model.profile.ground_truth = GroundTruth::None;
    let model = crate::qmodel::tailor(&model, &model.profile.clone()).unwrap();
    let report = evaluate(&model, &fixture().inputs, &opts()).unwrap();
    for id in ["dev_goodness_of_fit", "runtime_goodness_of_fit", "fairness", "balancedness"] {
        let r = report.result(id).unwrap();
        assert_eq!(r.status, Status::NotEvaluable, "{id}");
        assert_eq!(r.reason.as_deref(), Some("labels unavailable"), "{id}");
    }
    assert_ne!(report.result("completeness").unwrap().status, Status::NotEvaluable);
    assert_eq!(gate(&report), GateStatus::GateFailure);
}

#[test]
fn partial_ground_truth_uses_available_labels() {
    let mut model = builtin_default_model();
    model.profile.ground_truth = GroundTruth::Partial;
    let mut inputs = fixture().inputs.clone();
    let rows: Vec<PredictionRow> = inputs
        .predictions
        .as_ref()
        .unwrap()
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            if i % 2 == 0 {
                r.true_label = None;
            }
            r
        })
        .collect();
    inputs.predictions = Some(PredictionTable::new(rows).unwrap());
    let report = evaluate(&model, &inputs, &opts()).unwrap();
    let gof = report.result("runtime_goodness_of_fit").unwrap();
    assert_ne!(gof.status, Status::NotEvaluable);
    assert_eq!(gof.values["n_unlabeled"], MetricValue::Count(100));
}

#[test]
fn missing_resource_log_only_blocks_efficiency() {
    let mut inputs = fixture().inputs.clone();
    inputs.resource_log = None;
    let report = evaluate(&builtin_default_model(), &inputs, &opts()).unwrap();
    let blocked: Vec<&str> = report
        .results()
        .filter(|r| r.status == Status::NotEvaluable)
        .map(|r| r.attribute_id.as_str())
        .collect();
    assert_eq!(
        blocked,
        [
            "environmental_impact",
            "output_supervision_overhead",
            "scope_supervision_overhead",
            "training_efficiency",
            "execution_efficiency"
        ]
    );
    for id in blocked {
        assert_eq!(report.result(id).unwrap().reason.as_deref(), Some("resource log unavailable"));
    }
}

#[test]
fn missing_checklist_only_blocks_manual_checklists() {
    let mut inputs = fixture().inputs.clone();
    inputs.checklist = None;
    let report = evaluate(&builtin_default_model(), &inputs, &opts()).unwrap();
    for id in ["social_impact", "non_ml_components"] {
        assert_eq!(report.result(id).unwrap().status, Status::NotEvaluable);
    }
    for id in ["appropriateness", "infrastructure_suitability"] {
        assert_eq!(report.result(id).unwrap().status, Status::Pass, "{id}");
    }
}

#[test]
fn checklist_missing_and_negative_evidence() {
    let mut inputs = fixture().inputs.clone();
    inputs.checklist = Some(vec![ChecklistEvidence::new("non_ml.subset_selected", EvidenceStatus::No, "")]);
    let report = evaluate(&builtin_default_model(), &inputs, &opts()).unwrap();
    let r = report.result("non_ml_components").unwrap();
    assert_eq!(r.status, Status::Fail);
    let details: Vec<&str> = r.findings.iter().map(|f| f.detail.as_str()).collect();
    assert_eq!(details, ["non_ml.subset_selected: answered no", "non_ml.subset_assessed: missing evidence"]);
    assert_eq!(report.result("social_impact").unwrap().status, Status::Fail);
}

#[test]
fn automated_items_follow_the_metric() {
    let mut inputs = fixture().inputs.clone();
    let d = inputs.descriptor.as_mut().unwrap();
    d.infrastructure_requirements.min_memory_bytes = 64.0 * 1_073_741_824.0;
    d.task = Task::Regression;
    let report = evaluate(&builtin_default_model(), &inputs, &opts()).unwrap();
    let infra = report.result("infrastructure_suitability").unwrap();
    assert_eq!(infra.status, Status::Fail);
    assert_eq!(infra.values["memory_sufficient"], MetricValue::Bool(false));
    assert!(infra.findings.iter().any(|f| f.detail.starts_with("infrastructure.memory: answered no")));
    assert_eq!(report.result("appropriateness").unwrap().status, Status::Fail);
}

#[test]
fn unknown_evidence_id_is_rejected() {
    let evidence = [ChecklistEvidence::new("nope", EvidenceStatus::Yes, "")];
    assert!(matches!(
        check_evidence_ids(&builtin_default_model(), &evidence),
        Err(Error::UnknownItemId(id)) if id == "nope"
    ));
    let known = [ChecklistEvidence::new("non_ml.subset_selected", EvidenceStatus::Yes, "")];
    check_evidence_ids(&builtin_default_model(), &known).unwrap();
}

#[test]
fn metric_error_becomes_not_evaluable() {
    let mut inputs = fixture().inputs.clone();
    let mut dev = inputs.dev.take().unwrap();
    let mut m = dev.manifest().clone();
    m.subset_column = None;
    let cols: Vec<_> = dev.columns().iter().filter(|c| c.name != "subset").cloned().collect();
    m.columns.retain(|c| c.name != "subset");
    dev = Dataset::new(m, cols).unwrap();
    inputs.dev = Some(dev);
    let model = small_model(vec![metric_attr(
        "tti",
        MetricSpec::new("train_test_independence").threshold(Threshold::new(Comparator::Le, 0.01)),
    )]);
    let report = evaluate(&model, &inputs, &opts()).unwrap();
    let r = report.result("tti").unwrap();
    assert_eq!(r.status, Status::NotEvaluable);
    assert!(r.reason.as_deref().unwrap().contains("subset"), "{:?}", r.reason);
}

#[test]
fn info_without_threshold() {
    let model = small_model(vec![metric_attr("complete", MetricSpec::new("completeness"))]);
    let report = evaluate(&model, &fixture().inputs, &opts()).unwrap();
    let r = report.result("complete").unwrap();
    assert_eq!(r.status, Status::Info);
    assert!(r.threshold_applied.is_none());
    assert_eq!(gate(&report), GateStatus::Pass);
}

#[test]
fn supplied_retrain_sets_are_preferred() {
    let mut inputs = fixture().inputs.clone();
    let kfold = inputs.retrain.iter_mut().find(|r| r.kind == RetrainKind::KFold).unwrap();
    let ids: Vec<String> = kfold.runs[0].predictions.ids().map(str::to_string).collect();
    let wrong: Vec<PredictionRow> = ids.iter().map(|id| PredictionRow::new(id.clone(), Some("capex"), "opex")).collect();
    kfold.runs[0] = RetrainRun {
        predictions: PredictionTable::new(wrong).unwrap(),
        ..kfold.runs[0].clone()
    };
    let spec = |source: &str| MetricSpec::new("cv_goodness_variance").param("source", serde_json::json!(source));
    let model = small_model(vec![metric_attr("supplied", spec("auto")), metric_attr("reference", spec("reference_learner"))]);
    let report = evaluate(&model, &inputs, &opts()).unwrap();
    let supplied = report.result("supplied").unwrap().values["variance"].as_f64().unwrap();
    let reference = report.result("reference").unwrap().values["variance"].as_f64().unwrap();
    assert!(supplied > 0.1, "{supplied}");
    assert!(reference < 0.01, "{reference}");
    assert!(report.result("reference").unwrap().findings[0].detail.contains("reference learner gaussian_nb"));
}

#[test]
fn retrain_dir_source_without_directory() {
    let mut inputs = fixture().inputs.clone();
    inputs.retrain.clear();
    let model = small_model(vec![metric_attr(
        "stab",
        MetricSpec::new("loo_stability").param("source", serde_json::json!("retrain_dir")),
    )]);
    let report = evaluate(&model, &inputs, &opts()).unwrap();
    assert_eq!(report.result("stab").unwrap().reason.as_deref(), Some("retrain predictions unavailable"));
}

#[test]
fn label_noise_robustness_runs() {
    let model = small_model(vec![metric_attr(
        "rob",
        MetricSpec::new("robustness_ela").param("noise_kind", serde_json::json!("label")),
    )]);
    let report = evaluate(&model, &fixture().inputs, &opts()).unwrap();
    let r = report.result("rob").unwrap();
    assert_eq!(r.status, Status::Info, "{:?}", r.reason);
    assert!(r.values["ela_max"].as_f64().unwrap() >= 0.0);
}

#[test]
fn gate_rules() {
    let attr = |id: &str, required: bool| QualityAttributeSpec {
        required,
        ..metric_attr(id, MetricSpec::new("completeness"))
    };
    let model = small_model(vec![attr("a", true), attr("b", false)]);
    let report_with = |a: Status, b: Status| {
        let results = vec![
            MetricResult::new(&model.attributes[0], a),
            MetricResult::new(&model.attributes[1], b),
        ];
        QualityReport::assemble(&model, results, 0, Default::default())
    };
    assert_eq!(gate(&report_with(Status::Pass, Status::Pass)), GateStatus::Pass);
    assert_eq!(gate(&report_with(Status::Info, Status::Fail)), GateStatus::Pass);
    assert_eq!(gate(&report_with(Status::Pass, Status::NotEvaluable)), GateStatus::Pass);
    assert_eq!(gate(&report_with(Status::Fail, Status::Pass)), GateStatus::GateFailure);
    assert_eq!(gate(&report_with(Status::NotEvaluable, Status::Pass)), GateStatus::GateFailure);
    assert_eq!(
        [GateStatus::Pass, GateStatus::GateFailure, GateStatus::ConfigError, GateStatus::InputError].map(GateStatus::exit_code),
        [0, 1, 2, 3]
    );
}

#[test]
fn markdown_shows_fail_row_and_summary() {
    let model = small_model(vec![
        metric_attr("complete", MetricSpec::new("completeness").threshold(Threshold::new(Comparator::Ge, 1.1))),
        metric_attr("cur", MetricSpec::new("currentness")),
    ]);
    let report = evaluate(&model, &fixture().inputs, &opts()).unwrap();
    assert_eq!(report.summary.n_fail, 1);
    let md = String::from_utf8(render_report(&report, ReportFormat::Markdown)).unwrap();
    assert!(md.contains("| View | Object | Attribute | Value | Status |"));
    assert!(md.contains("n_fail=1"));
    let fail_row = md.lines().find(|l| l.ends_with("| Fail |")).unwrap();
    assert!(fail_row.starts_with("| Data | Development data | complete | completeness = "), "{fail_row}");
    assert!(fail_row.contains("(target >= 1.1)"));
}

#[test]
fn empty_findings_are_serialized() {
    let model = small_model(vec![metric_attr("size", MetricSpec::new("interpretability_complexity"))]);
    let mut inputs = fixture().inputs.clone();
    inputs.digests.insert("dev".into(), "abc".into());
    let report = evaluate(&model, &inputs, &opts()).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&render_report(&report, ReportFormat::Json)).unwrap();
    let result = &json["sections"][0]["results"][0];
    assert_eq!(result["findings"], serde_json::json!([]));
    assert!(result.get("reason").unwrap().is_null());
    assert_eq!(json["input_digests"]["dev"], "abc");
    assert_eq!(json["summary"]["n_info"], 1);
}

#[test]
fn json_report_is_deterministic_and_newline_terminated() {
    let model = builtin_default_model();
    let a = render_report(&evaluate(&model, &fixture().inputs, &opts()).unwrap(), ReportFormat::Json);
    let b = render_report(&evaluate(&model, &fixture().inputs, &opts()).unwrap(), ReportFormat::Json);
    assert_eq!(a, b);
    assert_eq!(a.last(), Some(&b'\n'));
    assert!(!a.contains(&b'\r'));
}

#[test]
fn simulator_contracts() {
    let dir = TempDir::new().unwrap();
    let p = SimulationParams {
        seed: 3,
        n_dev: 200,
        n_runtime: 1000,
        error_rate: 0.1,
        supervisor_quality: 1.0,
        ..SimulationParams::default()
    };
    let summary = simulate_use_case(&p, dir.path()).unwrap();
    assert_eq!(summary.wrong_predictions, 100);
    assert_eq!(summary.out_of_scope, 10);
    let inputs = InputPaths::simulated(dir.path()).load().unwrap();
    let preds = inputs.predictions.as_ref().unwrap();
    let gof = mm::goodness_of_fit(preds).unwrap();
    assert!((gof.accuracy - 0.9).abs() <= 0.02);
    let sup = sm::output_supervision_effectiveness(preds).unwrap();
    assert_eq!(sup.error_recall, 1.0);
    let truth = inputs.scope_truth.as_ref().unwrap();
    assert_eq!(truth.values().filter(|b| **b).count(), 10);
    assert_eq!(inputs.dev.as_ref().unwrap().n_rows(), 200);
    assert_eq!(inputs.retrain.len(), 2);
}

#[test]
fn simulator_rejects_bad_parameters() {
    let dir = TempDir::new().unwrap();
    for p in [
        SimulationParams { n_dev: 9, ..params() },
        SimulationParams { n_runtime: 0, ..params() },
        SimulationParams { drift: 1.5, ..params() },
        SimulationParams { error_rate: -0.1, ..params() },
        SimulationParams { supervisor_quality: f64::NAN, ..params() },
    ] {
        assert!(matches!(simulate_use_case(&p, dir.path()), Err(Error::BadParameter(_))), "{p:?}");
    }
}

#[test]
fn simulator_works_at_minimum_size() {
    let dir = TempDir::new().unwrap();
    let p = SimulationParams { n_dev: 10, n_runtime: 10, ..params() };
    simulate_use_case(&p, dir.path()).unwrap();
    let inputs = InputPaths::simulated(dir.path()).load().unwrap();
    let report = evaluate(&builtin_default_model(), &inputs, &opts()).unwrap();
    assert_eq!(report.results().count(), 29);
}

#[test]
fn input_digests_match_files() {
    let dir = TempDir::new().unwrap();
    simulate_use_case(&SimulationParams { n_dev: 50, n_runtime: 20, ..params() }, dir.path()).unwrap();
    let inputs = InputPaths::simulated(dir.path()).load().unwrap();
    assert_eq!(inputs.digests.len(), 12);
    assert_eq!(inputs.digests["dev"], crate::dataio::file_digest(&dir.path().join(files::DEV)).unwrap());
    assert_eq!(
        inputs.digests["retrain_dir_2"],
        crate::dataio::dir_digest(&dir.path().join(files::RETRAIN_LOO)).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stricter_thresholds_never_reduce_failures(a in 0.0f64..1.2, delta in 0.0f64..0.5) {
        let model_at = |t: f64| small_model(vec![
            metric_attr("complete", MetricSpec::new("completeness").threshold(Threshold::new(Comparator::Ge, t))),
            metric_attr("balance", MetricSpec::new("balancedness").threshold(Threshold::new(Comparator::Ge, t))),
            metric_attr("scope", MetricSpec::new("scope_compliance").threshold(Threshold::new(Comparator::Ge, t))),
        ]);
        let loose = evaluate(&model_at(a), &fixture().inputs, &opts()).unwrap();
        let strict = evaluate(&model_at(a + delta), &fixture().inputs, &opts()).unwrap();
        prop_assert!(strict.summary.n_fail >= loose.summary.n_fail);
    }
}
