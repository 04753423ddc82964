//! Synthetic purchase-order classification use case: capex versus opex
//! orders with amount, quantity, department, description, order date and
//! region, plus every auxiliary input the default quality model reads.

use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::canonical::to_canonical_string;
use crate::dataio::{
    ChecklistEvidence, Column, ColumnSpec, ColumnType, DataManifest, Dataset, DatasetRole, EvidenceStatus,
    InfrastructureRequirements, ModelDescriptor, Phase, PredictionRow, PredictionTable, ResourceEntry,
    ResourceLog, ScopeTruthEntry,
};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::qmodel::{builtin_default_model, Task};
use crate::reflearner::{run_kfold, run_loo, train, Learner};

pub const CLASSES: [&str; 2] = ["capex", "opex"];
const CAPEX_SHARE: f64 = 0.4;
const DEPARTMENTS: [&str; 5] = ["it", "facilities", "operations", "marketing", "finance"];
const DEPARTMENT_WEIGHTS: [[f64; 5]; 2] = [[0.35, 0.35, 0.2, 0.05, 0.05], [0.15, 0.1, 0.25, 0.25, 0.25]];
const REGIONS: [&str; 4] = ["north", "south", "east", "west"];
const WORDS: [[&str; 8]; 2] = [
    ["server", "laptop", "forklift", "furniture", "license", "installation", "machine", "vehicle"],
    ["cleaning", "subscription", "travel", "catering", "consulting", "repair", "supplies", "postage"],
];
/// Mean and standard deviation of the order amount per class.
const AMOUNT: [(f64, f64); 2] = [(5000.0, 600.0), (1000.0, 300.0)];
const OUT_OF_SCOPE_SHARE: f64 = 0.01;
const FALSE_ALARM_SHARE: f64 = 0.02;
const MISSING_DESCRIPTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationParams {
    pub seed: u64,
    pub n_dev: usize,
    pub n_runtime: usize,
    /// Runtime mean shift of the amount in units of 3 development standard deviations.
    pub drift: f64,
    pub error_rate: f64,
    /// Recall of the output and scope supervisors.
    pub supervisor_quality: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        SimulationParams {
            seed: 0,
            n_dev: 2000,
            n_runtime: 1000,
            drift: 0.0,
            error_rate: 0.1,
            supervisor_quality: 0.9,
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_dev", self.n_dev), ("n_runtime", self.n_runtime)] {
            if n < 10 {
                return Err(Error::BadParameter(format!("{name} must be at least 10, got {n}")));
            }
        }
        for (name, x) in [
            ("drift", self.drift),
            ("error_rate", self.error_rate),
            ("supervisor_quality", self.supervisor_quality),
        ] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::BadParameter(format!("{name} must lie in [0, 1], got {x}")));
            }
        }
        Ok(())
    }
}

/// File names inside the output directory, relative to it.
pub mod files {
    pub const QUALITY_MODEL: &str = "quality_model.json";
    pub const DEV: &str = "dev.csv";
    pub const DEV_MANIFEST: &str = "dev_manifest.json";
    pub const RUNTIME: &str = "runtime.csv";
    pub const RUNTIME_MANIFEST: &str = "runtime_manifest.json";
    pub const PREDICTIONS: &str = "predictions.csv";
    pub const DEV_PREDICTIONS: &str = "dev_predictions.csv";
    pub const RETRAIN_KFOLD: &str = "retrain/kfold";
    pub const RETRAIN_LOO: &str = "retrain/loo";
    pub const RESOURCE_LOG: &str = "resource_log.jsonl";
    pub const MODEL_DESCRIPTOR: &str = "model_descriptor.json";
    pub const CHECKLIST: &str = "checklist.json";
    pub const SCOPE_TRUTH: &str = "scope_truth.json";
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub out_dir: PathBuf,
    pub wrong_predictions: usize,
    pub out_of_scope: usize,
    pub amount_shift: f64,
}

struct Orders {
    amount: Vec<Option<f64>>,
    quantity: Vec<Option<f64>>,
    department: Vec<Option<String>>,
    description: Vec<Option<String>>,
    order_date: Vec<Option<NaiveDateTime>>,
    region: Vec<Option<String>>,
    category: Vec<Option<String>>,
    /// Class index per row.
    class: Vec<usize>,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

fn count(share: f64, n: usize) -> usize {
    ((share * n as f64).round() as usize).min(n)
}

/// Draws `n` orders dated uniformly within `days` days before `until`.
fn draw_orders(rng: &mut ChaCha8Rng, n: usize, until: NaiveDate, days: i64) -> Orders {
    let mut class: Vec<usize> = (0..n).map(|i| usize::from(i >= count(CAPEX_SHARE, n))).collect();
    class.shuffle(rng);
    let departments = DEPARTMENT_WEIGHTS.map(|w| WeightedIndex::new(w).expect("positive weights"));
    let amounts = AMOUNT.map(|(m, s)| Normal::new(m, s).expect("positive sd"));
    let mut o = Orders {
        amount: Vec::with_capacity(n),
        quantity: Vec::with_capacity(n),
        department: Vec::with_capacity(n),
        description: Vec::with_capacity(n),
        order_date: Vec::with_capacity(n),
        region: Vec::with_capacity(n),
        category: Vec::with_capacity(n),
        class: class.clone(),
    };
    for &c in &class {
        let amount: f64 = amounts[c].sample(rng).max(5.0);
        o.amount.push(Some((amount * 100.0).round() / 100.0));
        o.quantity.push(Some(f64::from(rng.random_range(1..=20u32))));
        o.department.push(Some(DEPARTMENTS[departments[c].sample(rng)].to_string()));
        let words: Vec<&str> = (0..rng.random_range(2..=6))
            .map(|_| {
                let vocab = if rng.random_bool(0.7) { c } else { 1 - c };
                WORDS[vocab][rng.random_range(0..WORDS[vocab].len())]
            })
            .collect();
        o.description
            .push((!rng.random_bool(MISSING_DESCRIPTION)).then(|| words.join(" ")));
        let day = until - Duration::days(rng.random_range(1..=days));
        let time = NaiveTime::from_hms_opt(rng.random_range(7..19), rng.random_range(0..60), 0).expect("valid time");
        o.order_date.push(Some(day.and_time(time)));
        o.region.push(Some(REGIONS[rng.random_range(0..REGIONS.len())].to_string()));
        o.category.push(Some(CLASSES[c].to_string()));
    }
    o
}

fn manifest(role: DatasetRole, evaluation_date: NaiveDate, with_subset: bool) -> DataManifest {
    let mut columns = vec![
        ColumnSpec::new("amount", ColumnType::Numeric),
        ColumnSpec::new("quantity", ColumnType::Numeric),
        ColumnSpec::new("department", ColumnType::Categorical),
        ColumnSpec::new("description", ColumnType::Text),
        ColumnSpec::new("order_date", ColumnType::Timestamp),
        ColumnSpec::new("region", ColumnType::Categorical),
        ColumnSpec::new("category", ColumnType::Categorical),
    ];
    if with_subset {
        columns.push(ColumnSpec::new("subset", ColumnType::Categorical));
    }
    let mut m = DataManifest::new(role, columns, evaluation_date);
    m.label_column = Some("category".into());
    m.timestamp_column = Some("order_date".into());
    m.group_column = Some("region".into());
    m.positive_class = Some(CLASSES[0].into());
    if with_subset {
        m.subset_column = Some("subset".into());
    }
    m
}

fn dataset(o: Orders, m: DataManifest, subset: Option<Vec<Option<String>>>) -> Result<Dataset> {
    let mut columns = vec![
        Column::numeric("amount", o.amount),
        Column::numeric("quantity", o.quantity),
        Column::categorical("department", o.department),
        Column::text("description", o.description),
        Column::timestamp("order_date", o.order_date),
        Column::categorical("region", o.region),
        Column::categorical("category", o.category),
    ];
    if let Some(s) = subset {
        columns.push(Column::categorical("subset", s));
    }
    Dataset::new(m, columns)
}

/// Stratified 70/15/15 train/validation/test assignment.
fn assign_subsets(rng: &mut ChaCha8Rng, class: &[usize]) -> Vec<Option<String>> {
    let mut subset = vec![None; class.len()];
    for c in 0..CLASSES.len() {
        let mut rows: Vec<usize> = (0..class.len()).filter(|&i| class[i] == c).collect();
        rows.shuffle(rng);
        let n_train = count(0.7, rows.len());
        let n_val = count(0.15, rows.len());
        for (k, &row) in rows.iter().enumerate() {
            let name = if k < n_train {
                "train"
            } else if k < n_train + n_val {
                "validation"
            } else {
                "test"
            };
            subset[row] = Some(name.to_string());
        }
    }
    subset
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = to_canonical_string(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn chosen(rng: &mut ChaCha8Rng, from: &[usize], k: usize) -> Vec<usize> {
    let mut picked: Vec<usize> = sample(rng, from.len(), k.min(from.len())).into_iter().map(|i| from[i]).collect();
    picked.sort_unstable();
    picked
}

fn resource_log(rng: &mut ChaCha8Rng) -> Result<ResourceLog> {
    const GIB: f64 = 1_073_741_824.0;
    let mut entries = Vec::new();
    let plan = [
        (Phase::Training, 1, (120.0, 240.0), (1.5, 3.0), (40.0, 60.0)),
        (Phase::Execution, 10, (0.5, 2.0), (0.2, 0.5), (15.0, 25.0)),
        (Phase::OutputSupervision, 5, (0.05, 0.2), (0.05, 0.1), (10.0, 15.0)),
        (Phase::ScopeSupervision, 5, (0.1, 0.4), (0.1, 0.2), (10.0, 15.0)),
    ];
    for (phase, n, time, mem, watts) in plan {
        for _ in 0..n {
            let t: f64 = rng.random_range(time.0..time.1);
            let mut e = ResourceEntry::new(phase, (t * 1000.0).round() / 1000.0, (rng.random_range(mem.0..mem.1) * GIB) as i64);
            e.energy_joules = Some((t * rng.random_range(watts.0..watts.1) * 10.0).round() / 10.0);
            entries.push(e);
        }
    }
    ResourceLog::new(entries)
}

/// Writes a complete input set for the default quality model into `out_dir`.
pub fn simulate_use_case(params: &SimulationParams, out_dir: &Path) -> Result<SimulationSummary> {
    params.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let p = |name: &str| out_dir.join(name);

    let dev_date = date(2024, 6, 30);
    let runtime_date = date(2024, 9, 30);
    let dev_orders = draw_orders(&mut rng, params.n_dev, dev_date, 330);
    let subset = assign_subsets(&mut rng, &dev_orders.class);
    let dev_amounts: Vec<f64> = dev_orders.amount.iter().flatten().copied().collect();
    let amount_shift = params.drift * 3.0 * crate::stats::sample_std(&dev_amounts);
    let dev_max = dev_amounts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dev = dataset(dev_orders, manifest(DatasetRole::Development, dev_date, true), Some(subset))?;

    let mut rt = draw_orders(&mut rng, params.n_runtime, runtime_date, 90);
    for a in rt.amount.iter_mut().flatten() {
        *a += amount_shift;
    }
    let n_rt = params.n_runtime;
    let all: Vec<usize> = (0..n_rt).collect();
    let out_of_scope = chosen(&mut rng, &all, count(OUT_OF_SCOPE_SHARE, n_rt).max(1));
    for &i in &out_of_scope {
        rt.amount[i] = Some((dev_max.max(amount_shift + dev_max) * rng.random_range(1.2..1.6) * 100.0).round() / 100.0);
    }
    let rt_class = rt.class.clone();
    let rt_region: Vec<String> = rt.region.iter().flatten().cloned().collect();
    let runtime = dataset(rt, manifest(DatasetRole::Runtime, runtime_date, false), None)?;

    // Runtime predictions with an exact error count and imperfect supervisors.
    let wrong = chosen(&mut rng, &all, count(params.error_rate, n_rt));
    let correct: Vec<usize> = all.iter().copied().filter(|i| wrong.binary_search(i).is_err()).collect();
    let mut flagged = chosen(&mut rng, &wrong, count(params.supervisor_quality, wrong.len()));
    flagged.extend(chosen(&mut rng, &correct, count(FALSE_ALARM_SHARE, correct.len())));
    flagged.sort_unstable();
    let in_scope: Vec<usize> = all.iter().copied().filter(|i| out_of_scope.binary_search(i).is_err()).collect();
    let mut context = chosen(&mut rng, &out_of_scope, count(params.supervisor_quality, out_of_scope.len()));
    context.extend(chosen(&mut rng, &in_scope, count(FALSE_ALARM_SHARE / 4.0, in_scope.len())));
    context.sort_unstable();
    let rows: Vec<PredictionRow> = (0..n_rt)
        .map(|i| {
            let truth = rt_class[i];
            let is_wrong = wrong.binary_search(&i).is_ok();
            let predicted = if is_wrong { 1 - truth } else { truth };
            let mut row = PredictionRow::new(i.to_string(), Some(CLASSES[truth]), CLASSES[predicted]).with_group(&rt_region[i]);
            let score: f64 = if is_wrong { rng.random_range(0.5..0.8) } else { rng.random_range(0.6..0.99) };
            row.score = Some((score * 1000.0).round() / 1000.0);
            row.supervisor_flag = Some(flagged.binary_search(&i).is_ok());
            row.context_changed = Some(context.binary_search(&i).is_ok());
            row
        })
        .collect();
    let predictions = PredictionTable::new(rows)?;

    // Development predictions and retrain sets from the reference learner.
    let split = crate::dataio::split_subsets(&dev)?;
    let learner = Learner::GaussianNb;
    let test_ids: Vec<String> = dev
        .subsets()?
        .iter()
        .enumerate()
        .filter(|(_, s)| s.as_deref() == Some("test"))
        .map(|(i, _)| i.to_string())
        .collect();
    let dev_predictions = train(learner, &split.train)?.predict_with_ids(&split.test, &test_ids)?;
    let kfold = run_kfold(learner, &split.train, 5.min(split.train.n_rows()), params.seed, ExecMode::Parallel)?;
    let loo = run_loo(learner, &split.train, &split.test, 50, params.seed, ExecMode::Parallel)?;

    let descriptor = ModelDescriptor {
        model_type_name: "gradient_boosted_trees".into(),
        task: Task::Classification,
        supported_column_types: [ColumnType::Numeric, ColumnType::Categorical, ColumnType::Text].into(),
        n_parameters: 2400,
        depth: Some(6),
        storage_bytes: 3_500_000,
        infrastructure_requirements: InfrastructureRequirements {
            min_memory_bytes: 4.0 * 1_073_741_824.0,
            min_compute_units: 2.0,
        },
    };
    let checklist = [
        ("social_impact.employees", "works council informed"),
        ("social_impact.discrimination", "no personal attributes used"),
        ("non_ml.subset_selected", "reliability, maintainability, security"),
        ("non_ml.subset_assessed", "reviewed with the platform team"),
    ]
    .map(|(id, note)| ChecklistEvidence::new(id, EvidenceStatus::Yes, note));
    let scope_truth: Vec<ScopeTruthEntry> = (0..n_rt)
        .map(|i| ScopeTruthEntry {
            instance_id: i.to_string(),
            out_of_scope: out_of_scope.binary_search(&i).is_ok(),
        })
        .collect();

    builtin_default_model().save(&p(files::QUALITY_MODEL))?;
    dev.write_csv(&p(files::DEV))?;
    write_json(&p(files::DEV_MANIFEST), dev.manifest())?;
    runtime.write_csv(&p(files::RUNTIME))?;
    write_json(&p(files::RUNTIME_MANIFEST), runtime.manifest())?;
    predictions.write_csv(&p(files::PREDICTIONS))?;
    dev_predictions.write_csv(&p(files::DEV_PREDICTIONS))?;
    kfold.write_dir(&p(files::RETRAIN_KFOLD))?;
    loo.set.write_dir(&p(files::RETRAIN_LOO))?;
    let log = resource_log(&mut rng)?;
    let log_path = p(files::RESOURCE_LOG);
    std::fs::write(&log_path, log.to_jsonl()).map_err(|e| Error::io(&log_path, e))?;
    write_json(&p(files::MODEL_DESCRIPTOR), &descriptor)?;
    write_json(&p(files::CHECKLIST), &checklist)?;
    write_json(&p(files::SCOPE_TRUTH), &scope_truth)?;

    Ok(SimulationSummary {
        out_dir: out_dir.to_path_buf(),
        wrong_predictions: wrong.len(),
        out_of_scope: out_of_scope.len(),
        amount_shift,
    })
}
