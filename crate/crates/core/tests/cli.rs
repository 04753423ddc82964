use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use mlqgate::evaluator::files;

fn mlqgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlqgate")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One small simulated use case shared by every test.
fn sim() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::TempDir::new().unwrap();
        let o = mlqgate(&["simulate", "--out", s(dir.path()), "--seed", "3", "--n-dev", "300", "--n-runtime", "150"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dir
    })
    .path()
}

fn base_args(out: &Path) -> Vec<String> {
    let d = sim();
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    vec![
        "evaluate".into(),
        "--config".into(),
        p(files::QUALITY_MODEL),
        "--dev".into(),
        p(files::DEV),
        "--dev-manifest".into(),
        p(files::DEV_MANIFEST),
        "--out".into(),
        s(out).into(),
    ]
}

fn full_args(out: &Path) -> Vec<String> {
    let d = sim();
    let mut args = base_args(out);
    for (flag, file) in [
        ("--runtime", files::RUNTIME),
        ("--runtime-manifest", files::RUNTIME_MANIFEST),
        ("--predictions", files::PREDICTIONS),
        ("--dev-predictions", files::DEV_PREDICTIONS),
        ("--retrain-dir", files::RETRAIN_KFOLD),
        ("--retrain-dir", files::RETRAIN_LOO),
        ("--resource-log", files::RESOURCE_LOG),
        ("--model-descriptor", files::MODEL_DESCRIPTOR),
        ("--checklist", files::CHECKLIST),
        ("--scope-truth", files::SCOPE_TRUTH),
    ] {
        args.push(flag.into());
        args.push(d.join(file).to_str().unwrap().into());
    }
    args
}

fn run(args: &[String]) -> Output {
    mlqgate(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn simulate_writes_every_input() {
    for f in [
        files::QUALITY_MODEL,
        files::DEV,
        files::DEV_MANIFEST,
        files::RUNTIME,
        files::RUNTIME_MANIFEST,
        files::PREDICTIONS,
        files::DEV_PREDICTIONS,
        files::RETRAIN_KFOLD,
        files::RETRAIN_LOO,
        files::RESOURCE_LOG,
        files::MODEL_DESCRIPTOR,
        files::CHECKLIST,
        files::SCOPE_TRUTH,
    ] {
        assert!(sim().join(f).exists(), "{f}");
    }
}

#[test]
fn validate_accepts_simulated_config() {
    let o = mlqgate(&["validate", "--config", s(&sim().join(files::QUALITY_MODEL))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("29 attributes"));
}

#[test]
fn full_run_passes_and_writes_both_formats() {
    let out = tempfile::TempDir::new().unwrap();
    let o = run(&full_args(out.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("gate passed"));
    let md = std::fs::read_to_string(out.path().join("report.md")).unwrap();
    assert!(md.contains("| View | Object | Attribute | Value | Status |"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["tool"], "mlqgate");
    assert_eq!(json["summary"]["n_not_evaluable"], 0);
}

#[test]
fn format_flag_limits_outputs() {
    let out = tempfile::TempDir::new().unwrap();
    let mut args = full_args(out.path());
    args.extend(["--format".into(), "md".into()]);
    assert_eq!(run(&args).status.code(), Some(0));
    assert!(out.path().join("report.md").exists());
    assert!(!out.path().join("report.json").exists());
}

#[test]
fn sequential_flag_gives_identical_report() {
    let (a, b) = (tempfile::TempDir::new().unwrap(), tempfile::TempDir::new().unwrap());
    run(&full_args(a.path()));
    let mut args = full_args(b.path());
    args.push("--sequential".into());
    run(&args);
    let read = |d: &Path| std::fs::read(d.join("report.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn dev_only_run_fails_gate_on_missing_inputs() {
    let out = tempfile::TempDir::new().unwrap();
    let o = run(&base_args(out.path()));
    assert_eq!(o.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert!(json["summary"]["n_not_evaluable"].as_u64().unwrap() > 0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(mlqgate(&["evaluate"]).status.code(), Some(2));
    let out = tempfile::TempDir::new().unwrap();
    let mut args = full_args(out.path());
    args.extend(["--format".into(), "pdf".into()]);
    assert_eq!(run(&args).status.code(), Some(2));
    let mut args = base_args(out.path());
    args.extend(["--runtime".into(), s(&sim().join(files::RUNTIME)).into()]);
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn bad_simulation_parameters_exit_2() {
    let out = tempfile::TempDir::new().unwrap();
    let o = mlqgate(&["simulate", "--out", s(out.path()), "--seed", "1", "--error-rate", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_file_exits_3() {
    let out = tempfile::TempDir::new().unwrap();
    let mut args = full_args(out.path());
    let at = args.iter().position(|a| a == "--predictions").unwrap();
    args[at + 1] = s(&out.path().join("nope.csv")).into();
    let o = run(&args);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("mlqgate: input:"));
}

#[test]
fn unknown_checklist_item_exits_3() {
    let out = tempfile::TempDir::new().unwrap();
    let checklist = out.path().join("checklist.json");
    let text = std::fs::read_to_string(sim().join(files::CHECKLIST)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let items = v.as_array_mut().unwrap();
    let mut extra = items[0].clone();
    extra["item_id"] = "no_such_item".into();
    items.push(extra);
    std::fs::write(&checklist, v.to_string()).unwrap();
    let mut args = full_args(out.path());
    let at = args.iter().position(|a| a == "--checklist").unwrap();
    args[at + 1] = s(&checklist).into();
    assert_eq!(run(&args).status.code(), Some(3));
}

#[test]
fn config_with_unknown_metric_exits_2() {
    let out = tempfile::TempDir::new().unwrap();
    let text = std::fs::read_to_string(sim().join(files::QUALITY_MODEL)).unwrap();
    let config = out.path().join("model.json");
    let broken = text.replacen("\"metric_id\": \"completeness\"", "\"metric_id\": \"no_such_metric\"", 1);
    assert_ne!(broken, text);
    std::fs::write(&config, broken).unwrap();
    assert_eq!(mlqgate(&["validate", "--config", s(&config)]).status.code(), Some(2));
}
