use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlqgate::evaluator::{
    check_evidence_ids, evaluate, gate, render_report, simulate_use_case, EvalOptions, GateStatus, InputPaths,
    ReportFormat, SimulationParams,
};
use mlqgate::qmodel::{load_quality_model, tailor, QualityModel};
use mlqgate::ExecMode;

/// Quality gate for machine-learning components.
///
/// Exit codes: 0 pass, 1 gate failure, 2 configuration error, 3 input error.
#[derive(Parser)]
#[command(name = "mlqgate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a quality-model config without evaluating anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a quality model against a set of inputs and gate on the result.
    Evaluate(EvaluateArgs),
    /// Write a synthetic purchase-order use case with every input file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    dev_manifest: PathBuf,
    #[arg(long, requires = "runtime_manifest")]
    runtime: Option<PathBuf>,
    #[arg(long, requires = "runtime")]
    runtime_manifest: Option<PathBuf>,
    /// Runtime predictions CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Predictions on held-out development rows.
    #[arg(long)]
    dev_predictions: Option<PathBuf>,
    /// Retrain prediction directory; repeat for k-fold and leave-one-out.
    #[arg(long)]
    retrain_dir: Vec<PathBuf>,
    #[arg(long)]
    resource_log: Option<PathBuf>,
    #[arg(long)]
    model_descriptor: Option<PathBuf>,
    #[arg(long)]
    checklist: Option<PathBuf>,
    /// Annotated out-of-scope cases.
    #[arg(long)]
    scope_truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,markdown", value_parser = parse_format)]
    format: Vec<ReportFormat>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run without worker threads.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    n_dev: usize,
    #[arg(long, default_value_t = 1000)]
    n_runtime: usize,
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 0.1)]
    error_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    supervisor_quality: f64,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    ReportFormat::parse(s).ok_or_else(|| format!("unknown format \"{s}\" (expected json or markdown)"))
}

fn fail(status: GateStatus, what: &str, err: impl std::fmt::Display) -> GateStatus {
    eprintln!("mlqgate: {what}: {err}");
    status
}

fn load_config(path: &Path) -> Result<QualityModel, GateStatus> {
    let model = load_quality_model(path).map_err(|e| fail(GateStatus::ConfigError, "config", e))?;
    tailor(&model, &model.profile).map_err(|e| fail(GateStatus::ConfigError, "config", e))
}

fn run_validate(config: &Path) -> GateStatus {
    match load_config(config) {
        Ok(m) => {
            println!("{} {}: {} attributes", m.name, m.version, m.attributes.len());
            GateStatus::Pass
        }
        Err(status) => status,
    }
}

fn run_evaluate(args: &EvaluateArgs) -> Result<GateStatus, GateStatus> {
    let config = load_quality_model(&args.config).map_err(|e| fail(GateStatus::ConfigError, "config", e))?;
    let model = tailor(&config, &config.profile).map_err(|e| fail(GateStatus::ConfigError, "config", e))?;
    let paths = InputPaths {
        dev: Some(args.dev.clone()),
        dev_manifest: Some(args.dev_manifest.clone()),
        runtime: args.runtime.clone(),
        runtime_manifest: args.runtime_manifest.clone(),
        predictions: args.predictions.clone(),
        dev_predictions: args.dev_predictions.clone(),
        retrain_dirs: args.retrain_dir.clone(),
        resource_log: args.resource_log.clone(),
        model_descriptor: args.model_descriptor.clone(),
        checklist: args.checklist.clone(),
        scope_truth: args.scope_truth.clone(),
    };
    let input_error = |e| fail(GateStatus::InputError, "input", e);
    let inputs = paths.load().map_err(input_error)?;
    if let Some(evidence) = &inputs.checklist {
        check_evidence_ids(&config, evidence).map_err(input_error)?;
    }
    let options = EvalOptions {
        seed: args.seed,
        mode: if args.sequential { ExecMode::Sequential } else { ExecMode::Parallel },
    };
    let report = evaluate(&model, &inputs, &options).map_err(|e| fail(GateStatus::ConfigError, "config", e))?;
    std::fs::create_dir_all(&args.out).map_err(|e| fail(GateStatus::InputError, "output directory", e))?;
    for format in &args.format {
        let path = args.out.join(format.file_name());
        std::fs::write(&path, render_report(&report, *format))
            .map_err(|e| fail(GateStatus::InputError, &path.display().to_string(), e))?;
    }
    let status = gate(&report);
    let s = report.summary;
    println!(
        "{} attributes: {} pass, {} fail, {} info, {} not evaluable; gate {}",
        s.n_pass + s.n_fail + s.n_info + s.n_not_evaluable,
        s.n_pass,
        s.n_fail,
        s.n_info,
        s.n_not_evaluable,
        if status == GateStatus::Pass { "passed" } else { "failed" }
    );
    Ok(status)
}

fn run_simulate(args: &SimulateArgs) -> GateStatus {
    let params = SimulationParams {
        seed: args.seed,
        n_dev: args.n_dev,
        n_runtime: args.n_runtime,
        drift: args.drift,
        error_rate: args.error_rate,
        supervisor_quality: args.supervisor_quality,
    };
    if let Err(e) = params.validate() {
        return fail(GateStatus::ConfigError, "simulate", e);
    }
    match simulate_use_case(&params, &args.out) {
        Ok(summary) => {
            println!(
                "wrote {}: {} wrong predictions, {} out-of-scope rows",
                summary.out_dir.display(),
                summary.wrong_predictions,
                summary.out_of_scope
            );
            GateStatus::Pass
        }
        Err(e) => fail(GateStatus::InputError, "simulate", e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match &cli.command {
        Command::Validate { config } => run_validate(config),
        Command::Evaluate(args) => run_evaluate(args).unwrap_or_else(|s| s),
        Command::Simulate(args) => run_simulate(args),
    };
    ExitCode::from(status.exit_code() as u8)
}
