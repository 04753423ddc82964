use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mlqgate::dataio::{Column, ColumnSpec, ColumnType, DataManifest, Dataset, DatasetRole};
use mlqgate::reflearner::{run_kfold, Learner};
use mlqgate::stats::{duplicate_overlap, knn_self_distances, KnnOptions};
use mlqgate::ExecMode;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

fn labelled(n: usize, seed: u64) -> Dataset {
    let rows = points(n, 3, seed);
    let mut m = DataManifest::new(
        DatasetRole::Development,
        vec![
            ColumnSpec::new("x0", ColumnType::Numeric),
            ColumnSpec::new("x1", ColumnType::Numeric),
            ColumnSpec::new("x2", ColumnType::Numeric),
            ColumnSpec::new("y", ColumnType::Categorical),
        ],
        NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
    );
    m.label_column = Some("y".into());
    let mut cols: Vec<Column> = (0..3)
        .map(|j| Column::numeric(&format!("x{j}"), rows.iter().map(|r| Some(r[j])).collect()))
        .collect();
    let y = rows.iter().map(|r| Some(if r[0] + r[1] > 0.0 { "a" } else { "b" }.to_string())).collect();
    cols.push(Column::categorical("y", y));
    Dataset::new(m, cols).unwrap()
}

fn bench(c: &mut Criterion) {
    let reference = points(3000, 4, 1);
    let mut g = c.benchmark_group("knn_self_distances");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| knn_self_distances(&reference, KnnOptions { k: 5, standardize: true }, mode).unwrap())
        });
    }
    g.finish();

    let (a, b) = (labelled(2000, 2), labelled(2000, 3));
    let mut g = c.benchmark_group("duplicate_overlap");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |bn| bn.iter(|| duplicate_overlap(&a, &b, mode).unwrap()));
    }
    g.finish();

    let d = labelled(5000, 4);
    let mut g = c.benchmark_group("run_kfold");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_kfold(Learner::Knn { k: 5 }, &d, 5, 0, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench
}
criterion_main!(benches);
