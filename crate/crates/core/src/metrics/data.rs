//! Data-view attributes over development and runtime datasets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{max_rate_gap, Finding, Measurement};
use crate::dataio::{Column, ColumnType, ColumnValues, Dataset};
use crate::error::{Error, Result};
use crate::exec::{map_slice, ExecMode};
use crate::stats::{self, chi_square_test, duplicate_overlap, ks_test, normalized_entropy, welch_t_test};

fn category_counts(values: &[Option<String>]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for v in values.iter().flatten() {
        *counts.entry(v.clone()).or_insert(0) += 1;
    }
    counts
}

/// Columns present in both datasets under the same name, skipping label,
/// subset and timestamp columns of either side.
fn shared_columns<'a>(a: &'a Dataset, b: &'a Dataset) -> Result<Vec<(&'a Column, &'a Column)>> {
    let mut pairs = Vec::new();
    for ca in a.columns() {
        if a.manifest().is_role_column(&ca.name) || b.manifest().is_role_column(&ca.name) {
            continue;
        }
        if let Some(cb) = b.column(&ca.name) {
            if ca.ty() != cb.ty() {
                return Err(Error::SchemaMismatch(format!(
                    "column \"{}\" is {:?} in one dataset and {:?} in the other",
                    ca.name,
                    ca.ty(),
                    cb.ty()
                )));
            }
            pairs.push((ca, cb));
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NumericTest {
    #[default]
    Welch,
    KolmogorovSmirnov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTest {
    pub column: String,
    pub method: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representativeness {
    pub tests: Vec<ColumnTest>,
    pub flagged_columns: Vec<String>,
    pub min_adjusted_p: f64,
    pub notices: Vec<Finding>,
}

/// Per-column two-sample tests of runtime against development data with a
/// Bonferroni adjustment over the tested columns.
pub fn representativeness(
    dev: &Dataset,
    runtime: &Dataset,
    alpha: f64,
    numeric_test: NumericTest,
) -> Result<Representativeness> {
    let mut raw = Vec::new();
    let mut notices = Vec::new();
    for (a, b) in shared_columns(dev, runtime)? {
        let outcome = match (&a.values, &b.values) {
            (ColumnValues::Numeric(_), ColumnValues::Numeric(_)) => {
                let (x, y) = (a.observed_numbers(), b.observed_numbers());
                match numeric_test {
                    NumericTest::Welch => welch_t_test(&x, &y),
                    NumericTest::KolmogorovSmirnov => ks_test(&x, &y),
                }
            }
            (ColumnValues::Categorical(x), ColumnValues::Categorical(y)) => {
                chi_square_test(&category_counts(x), &category_counts(y))
            }
            _ => {
                notices.push(Finding::note(format!("{:?} column not tested", a.ty()).to_lowercase()).column(&a.name));
                continue;
            }
        };
        match outcome {
            Ok(t) => raw.push((a.name.clone(), t)),
            Err(e) => notices.push(Finding::note(format!("not tested: {e}")).column(&a.name)),
        }
    }
    if raw.is_empty() {
        return Err(Error::NoComparableColumns);
    }
    let m = raw.len() as f64;
    let tests: Vec<ColumnTest> = raw
        .into_iter()
        .map(|(column, t)| {
            let adjusted_p = (t.p_value * m).min(1.0);
            ColumnTest {
                column,
                method: t.method,
                statistic: t.statistic,
                p_value: t.p_value,
                adjusted_p,
                flagged: adjusted_p < alpha,
            }
        })
        .collect();
    let flagged_columns = tests.iter().filter(|t| t.flagged).map(|t| t.column.clone()).collect();
    let min_adjusted_p = tests.iter().map(|t| t.adjusted_p).fold(1.0, f64::min);
    Ok(Representativeness {
        tests,
        flagged_columns,
        min_adjusted_p,
        notices,
    })
}

impl From<Representativeness> for Measurement {
    fn from(r: Representativeness) -> Self {
        let mut m = Measurement::default()
            .with("flagged_count", r.flagged_columns.len())
            .with("tested_count", r.tests.len())
            .with("min_adjusted_p", r.min_adjusted_p);
        m.findings.extend(r.tests.iter().filter(|t| t.flagged).map(|t| {
            Finding::note(format!("{} distribution differs ({})", t.column, t.method))
                .column(&t.column)
                .value(t.adjusted_p)
        }));
        m.findings.extend(r.notices);
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataCorrectness {
    pub outlier_count: usize,
    pub outlier_fraction: f64,
    pub cells_checked: usize,
    pub outliers: Vec<Finding>,
    pub notices: Vec<Finding>,
}

/// Cells whose within-column |z| exceeds `z_threshold`.
pub fn data_correctness(d: &Dataset, z_threshold: f64, mode: ExecMode) -> Result<DataCorrectness> {
    let numeric: Vec<&Column> = d.columns().iter().filter(|c| c.ty() == ColumnType::Numeric).collect();
    if numeric.is_empty() {
        return Err(Error::NoNumericColumns);
    }
    let per_column = map_slice(mode, &numeric, |col| {
        let values = col.as_numeric().expect("numeric column");
        let (rows, xs): (Vec<usize>, Vec<f64>) =
            values.iter().enumerate().filter_map(|(i, v)| v.map(|x| (i, x))).unzip();
        match stats::zscores(&xs) {
            Ok(z) => {
                let hits: Vec<Finding> = rows
                    .iter()
                    .zip(&z)
                    .filter(|(_, z)| z.abs() > z_threshold)
                    .map(|(&row, z)| Finding::note("z-score outlier").column(&col.name).row(row).value(*z))
                    .collect();
                (xs.len(), hits, None)
            }
            Err(_) => (
                xs.len(),
                Vec::new(),
                Some(Finding::note("constant or near-empty column skipped").column(&col.name)),
            ),
        }
    });
    let mut out = DataCorrectness {
        outlier_count: 0,
        outlier_fraction: 0.0,
        cells_checked: 0,
        outliers: Vec::new(),
        notices: Vec::new(),
    };
    for (n, hits, notice) in per_column {
        out.cells_checked += n;
        out.outlier_count += hits.len();
        out.outliers.extend(hits);
        out.notices.extend(notice);
    }
    if out.cells_checked > 0 {
        out.outlier_fraction = out.outlier_count as f64 / out.cells_checked as f64;
    }
    out.outliers.sort_by_key(|f| f.row);
    Ok(out)
}

impl From<DataCorrectness> for Measurement {
    fn from(r: DataCorrectness) -> Self {
        let mut m = Measurement::default()
            .with("outlier_count", r.outlier_count)
            .with("outlier_fraction", r.outlier_fraction);
        m.findings.extend(r.notices);
        m.push_capped(r.outliers);
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub completeness: f64,
    pub missing_fraction: f64,
    pub missing_cells: usize,
    pub missing_per_column: Vec<(String, usize)>,
}

/// Share of non-missing cells, with per-column missing counts.
pub fn completeness(d: &Dataset) -> Result<Completeness> {
    let cells = d.n_rows() * d.n_cols();
    if cells == 0 {
        return Err(Error::EmptyDataset);
    }
    let missing = d.missing_cells();
    let missing_fraction = missing as f64 / cells as f64;
    Ok(Completeness {
        completeness: 1.0 - missing_fraction,
        missing_fraction,
        missing_cells: missing,
        missing_per_column: d.columns().iter().map(|c| (c.name.clone(), c.missing_count())).collect(),
    })
}

impl From<Completeness> for Measurement {
    fn from(r: Completeness) -> Self {
        let mut m = Measurement::default()
            .with("completeness", r.completeness)
            .with("missing_cells", r.missing_cells);
        m.findings.extend(
            r.missing_per_column
                .iter()
                .filter(|(_, n)| *n > 0)
                .map(|(c, n)| Finding::note("missing values").column(c).value(*n)),
        );
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Currentness {
    pub median_age_days: f64,
    pub max_age_days: i64,
    pub missing_timestamps: usize,
    pub future: Vec<Finding>,
}

/// Row ages in whole days before the manifest's evaluation date.
pub fn currentness(d: &Dataset) -> Result<Currentness> {
    let stamps = d.timestamps()?;
    let eval = d.manifest().evaluation_date;
    let column = d.manifest().timestamp_column.clone().unwrap_or_default();
    let mut ages = Vec::new();
    let mut future = Vec::new();
    let mut missing = 0;
    for (row, t) in stamps.iter().enumerate() {
        match t {
            Some(t) => {
                let age = (eval - t.date()).num_days();
                if age < 0 {
                    future.push(
                        Finding::note("timestamp after evaluation date")
                            .column(&column)
                            .row(row)
                            .value(age as f64),
                    );
                }
                ages.push(age);
            }
            None => missing += 1,
        }
    }
    if ages.is_empty() {
        return Err(Error::EmptyInput("no observed timestamps".into()));
    }
    let as_f64: Vec<f64> = ages.iter().map(|&a| a as f64).collect();
    Ok(Currentness {
        median_age_days: stats::median(&as_f64).expect("nonempty"),
        max_age_days: *ages.iter().max().expect("nonempty"),
        missing_timestamps: missing,
        future,
    })
}

impl From<Currentness> for Measurement {
    fn from(r: Currentness) -> Self {
        let mut m = Measurement::default()
            .with("median_age_days", r.median_age_days)
            .with("max_age_days", r.max_age_days as f64)
            .with("missing_timestamps", r.missing_timestamps);
        m.push_capped(r.future);
        m
    }
}

/// A cell-level consistency rule supplied in the quality model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConsistencyRule {
    Range { column: String, min: f64, max: f64 },
    Vocabulary { column: String, values: BTreeSet<String> },
    WordCount { column: String, min: u64, max: u64 },
}

impl ConsistencyRule {
    pub fn column(&self) -> &str {
        match self {
            ConsistencyRule::Range { column, .. }
            | ConsistencyRule::Vocabulary { column, .. }
            | ConsistencyRule::WordCount { column, .. } => column,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            ConsistencyRule::Range { min, max, column } => {
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return Err(format!("range rule on \"{column}\" needs finite min <= max"));
                }
            }
            ConsistencyRule::Vocabulary { values, column } => {
                if values.is_empty() {
                    return Err(format!("vocabulary rule on \"{column}\" is empty"));
                }
            }
            ConsistencyRule::WordCount { min, max, column } => {
                if min > max {
                    return Err(format!("word-count rule on \"{column}\" has min > max"));
                }
            }
        }
        Ok(())
    }

    fn check(&self, col: &Column, row: usize) -> Option<Finding> {
        let base = || Finding::note("").column(&col.name).row(row);
        match (self, &col.values) {
            (ConsistencyRule::Range { min, max, .. }, ColumnValues::Numeric(v)) => {
                let x = v[row]?;
                (x < *min || x > *max).then(|| Finding {
                    detail: format!("outside [{min}, {max}]"),
                    ..base().value(x)
                })
            }
            (ConsistencyRule::Vocabulary { values, .. }, ColumnValues::Categorical(v) | ColumnValues::Text(v)) => {
                let s = v[row].as_ref()?;
                (!values.contains(s)).then(|| Finding {
                    detail: format!("\"{s}\" not in vocabulary"),
                    ..base()
                })
            }
            (ConsistencyRule::WordCount { min, max, .. }, ColumnValues::Text(v) | ColumnValues::Categorical(v)) => {
                let words = v[row].as_ref()?.split_whitespace().count() as u64;
                (words < *min || words > *max).then(|| Finding {
                    detail: format!("word count outside [{min}, {max}]"),
                    ..base().value(words)
                })
            }
            _ => None,
        }
    }

    fn applies_to(&self, ty: ColumnType) -> bool {
        matches!(
            (self, ty),
            (ConsistencyRule::Range { .. }, ColumnType::Numeric)
                | (
                    ConsistencyRule::Vocabulary { .. } | ConsistencyRule::WordCount { .. },
                    ColumnType::Categorical | ColumnType::Text
                )
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntraConsistency {
    pub violation_count: usize,
    pub violations: Vec<Finding>,
}

/// Cells violating range, vocabulary or word-count rules, ordered by row then column.
pub fn intra_consistency(d: &Dataset, rules: &[ConsistencyRule]) -> Result<IntraConsistency> {
    let mut bound = Vec::with_capacity(rules.len());
    for rule in rules {
        let (idx, col) = d
            .columns()
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == rule.column())
            .ok_or_else(|| Error::UnknownColumnInRule(rule.column().to_string()))?;
        if !rule.applies_to(col.ty()) {
            return Err(Error::InvalidArgument(format!(
                "rule on \"{}\" does not apply to a {:?} column",
                col.name,
                col.ty()
            )));
        }
        bound.push((idx, rule, col));
    }
    let mut hits: Vec<(usize, usize, Finding)> = Vec::new();
    for (idx, rule, col) in bound {
        for row in 0..d.n_rows() {
            if let Some(f) = rule.check(col, row) {
                hits.push((row, idx, f));
            }
        }
    }
    hits.sort_by_key(|(row, idx, _)| (*row, *idx));
    Ok(IntraConsistency {
        violation_count: hits.len(),
        violations: hits.into_iter().map(|(_, _, f)| f).collect(),
    })
}

impl From<IntraConsistency> for Measurement {
    fn from(r: IntraConsistency) -> Self {
        let mut m = Measurement::default().with("violation_count", r.violation_count);
        m.push_capped(r.violations);
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestIndependence {
    pub exact_overlap: f64,
    pub near_overlap: f64,
    pub exact_count: usize,
    pub near_count: usize,
}

/// Share of test rows duplicated, exactly or nearly, in the training rows.
pub fn train_test_independence(train: &Dataset, test: &Dataset, mode: ExecMode) -> Result<TrainTestIndependence> {
    let o = duplicate_overlap(train, test, mode)?;
    Ok(TrainTestIndependence {
        exact_overlap: o.exact_fraction,
        near_overlap: o.near_fraction,
        exact_count: o.exact_count,
        near_count: o.near_count,
    })
}

impl From<TrainTestIndependence> for Measurement {
    fn from(r: TrainTestIndependence) -> Self {
        Measurement::default()
            .with("exact_overlap", r.exact_overlap)
            .with("near_overlap", r.near_overlap)
            .with("exact_duplicates", r.exact_count)
            .with("near_duplicates", r.near_count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balancedness {
    pub normalized_entropy: f64,
    pub imbalance_ratio: f64,
    pub class_counts: BTreeMap<String, u64>,
    pub notices: Vec<Finding>,
}

/// Label entropy and max/min class-count ratio. Declared but unobserved
/// classes count as zero, which makes the ratio infinite.
pub fn balancedness(d: &Dataset, class_vocabulary: Option<&[String]>) -> Result<Balancedness> {
    let mut counts = category_counts(d.labels()?);
    let mut notices = Vec::new();
    if let Some(vocab) = class_vocabulary {
        for c in vocab {
            counts.entry(c.clone()).or_insert(0);
        }
    }
    if counts.values().all(|&c| c == 0) {
        return Err(Error::NoLabeledRows);
    }
    if counts.len() == 1 {
        notices.push(Finding::note("single class observed"));
    }
    let max = *counts.values().max().expect("nonempty");
    let min = *counts.values().min().expect("nonempty");
    let imbalance_ratio = if min == 0 { f64::INFINITY } else { max as f64 / min as f64 };
    Ok(Balancedness {
        normalized_entropy: normalized_entropy(&counts)?,
        imbalance_ratio,
        class_counts: counts,
        notices,
    })
}

impl From<Balancedness> for Measurement {
    fn from(r: Balancedness) -> Self {
        let mut m = Measurement::default()
            .with("normalized_entropy", r.normalized_entropy)
            .with("imbalance_ratio", r.imbalance_ratio);
        m.findings.extend(r.notices);
        m.findings.extend(
            r.class_counts
                .iter()
                .map(|(class, n)| Finding::note(format!("class \"{class}\"")).value(*n)),
        );
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsenceOfBias {
    pub max_positive_rate_gap: f64,
    /// Positive-label count and group size per group.
    pub per_group: BTreeMap<String, (u64, u64)>,
}

/// Largest difference in positive-label rate between any two groups.
pub fn absence_of_bias(d: &Dataset, positive_class: &str) -> Result<AbsenceOfBias> {
    let labels = d.labels()?;
    let groups = d.groups()?;
    let classes: BTreeSet<&str> = labels.iter().flatten().map(String::as_str).collect();
    if classes.len() > 2 {
        return Err(Error::NonBinaryLabel(format!("{} classes observed", classes.len())));
    }
    let mut per_group: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (label, group) in labels.iter().zip(groups) {
        if let (Some(l), Some(g)) = (label, group) {
            let e = per_group.entry(g.clone()).or_default();
            e.1 += 1;
            if l == positive_class {
                e.0 += 1;
            }
        }
    }
    if per_group.len() < 2 {
        return Err(Error::NoEligibleGroups);
    }
    let rates: Vec<(u64, u64)> = per_group.values().copied().collect();
    Ok(AbsenceOfBias {
        max_positive_rate_gap: max_rate_gap(&rates),
        per_group,
    })
}

impl From<AbsenceOfBias> for Measurement {
    fn from(r: AbsenceOfBias) -> Self {
        let mut m = Measurement::default().with("max_positive_rate_gap", r.max_positive_rate_gap);
        m.findings.extend(r.per_group.iter().map(|(g, (pos, n))| {
            Finding::note(format!("group \"{g}\" positive rate ({pos} of {n})")).value(*pos as f64 / *n as f64)
        }));
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterConsistency {
    pub range_mismatches: Vec<Finding>,
    pub unseen_categories: Vec<Finding>,
    pub crosswise_outliers: usize,
    pub crosswise_outlier_fraction: f64,
    pub notices: Vec<Finding>,
}

/// Runtime values outside development ranges and vocabularies, and runtime
/// cells that are z-score outliers under development statistics.
pub fn inter_consistency(dev: &Dataset, runtime: &Dataset, z_threshold: f64) -> Result<InterConsistency> {
    let pairs = shared_columns(dev, runtime)?;
    if pairs.is_empty() {
        return Err(Error::SchemaMismatch("datasets share no feature columns".into()));
    }
    let mut out = InterConsistency {
        range_mismatches: Vec::new(),
        unseen_categories: Vec::new(),
        crosswise_outliers: 0,
        crosswise_outlier_fraction: 0.0,
        notices: Vec::new(),
    };
    let mut checked = 0usize;
    for (a, b) in pairs {
        match (&a.values, &b.values) {
            (ColumnValues::Numeric(_), ColumnValues::Numeric(_)) => {
                let (x, y) = (a.observed_numbers(), b.observed_numbers());
                if x.is_empty() || y.is_empty() {
                    continue;
                }
                let (lo, hi) = min_max(&x);
                let (rlo, rhi) = min_max(&y);
                if rlo < lo {
                    out.range_mismatches.push(
                        Finding::note(format!("runtime minimum below development minimum {lo}"))
                            .column(&a.name)
                            .value(rlo),
                    );
                }
                if rhi > hi {
                    out.range_mismatches.push(
                        Finding::note(format!("runtime maximum above development maximum {hi}"))
                            .column(&a.name)
                            .value(rhi),
                    );
                }
                let sd = stats::sample_std(&x);
                if sd > 0.0 && sd.is_finite() {
                    let m = stats::mean(&x);
                    checked += y.len();
                    out.crosswise_outliers += y.iter().filter(|v| ((*v - m) / sd).abs() > z_threshold).count();
                } else {
                    out.notices.push(Finding::note("constant development column skipped").column(&a.name));
                }
            }
            (ColumnValues::Categorical(x), ColumnValues::Categorical(y)) => {
                let seen: BTreeSet<&String> = x.iter().flatten().collect();
                let unseen: BTreeSet<&String> = y.iter().flatten().filter(|v| !seen.contains(v)).collect();
                out.unseen_categories.extend(
                    unseen
                        .into_iter()
                        .map(|v| Finding::note(format!("category \"{v}\" unseen in development data")).column(&a.name)),
                );
            }
            _ => {}
        }
    }
    if checked > 0 {
        out.crosswise_outlier_fraction = out.crosswise_outliers as f64 / checked as f64;
    }
    Ok(out)
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

impl From<InterConsistency> for Measurement {
    fn from(r: InterConsistency) -> Self {
        let mut m = Measurement::default()
            .with("crosswise_outlier_fraction", r.crosswise_outlier_fraction)
            .with("crosswise_outliers", r.crosswise_outliers)
            .with("mismatch_count", r.range_mismatches.len() + r.unseen_categories.len());
        m.findings.extend(r.notices);
        m.push_capped(r.range_mismatches.into_iter().chain(r.unseen_categories));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{ColumnSpec, DataManifest, DatasetRole};
    use chrono::{NaiveDate, NaiveDateTime};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 6, 30).unwrap()
    }

    fn dataset(columns: Vec<Column>) -> Dataset {
        let specs = columns.iter().map(|c| ColumnSpec::new(&c.name, c.ty())).collect();
        Dataset::new(DataManifest::new(DatasetRole::Development, specs, date()), columns).unwrap()
    }

    fn num(name: &str, xs: &[f64]) -> Column {
        Column::numeric(name, xs.iter().map(|v| Some(*v)).collect())
    }

    fn cat(name: &str, xs: &[&str]) -> Column {
        Column::categorical(name, xs.iter().map(|v| Some(v.to_string())).collect())
    }

    fn labeled(labels: &[&str], groups: Option<&[&str]>) -> Dataset {
        let mut cols = vec![cat("y", labels)];
        if let Some(g) = groups {
            cols.push(cat("g", g));
        }
        let specs = cols.iter().map(|c| ColumnSpec::new(&c.name, c.ty())).collect();
        let mut m = DataManifest::new(DatasetRole::Development, specs, date());
        m.label_column = Some("y".into());
        m.group_column = groups.map(|_| "g".into());
        Dataset::new(m, cols).unwrap()
    }

    fn repeat(pairs: &[(&'static str, usize)]) -> Vec<&'static str> {
        pairs.iter().flat_map(|(v, n)| std::iter::repeat_n(*v, *n)).collect()
    }

    #[test]
    fn representativeness_identical_and_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..500).map(|_| n.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..500).map(|_| n.sample(&mut rng) + 3.0).collect();
        let cats: Vec<&str> = (0..500).map(|i| ["a", "b", "c"][i % 3]).collect();
        let dev = dataset(vec![num("x", &x), cat("c", &cats)]);
        let r = representativeness(&dev, &dev, 0.05, NumericTest::Welch).unwrap();
        assert!(r.flagged_columns.is_empty());
        assert_eq!(r.min_adjusted_p, 1.0);
        let rt = dataset(vec![num("x", &y), cat("c", &cats)]);
        let r = representativeness(&dev, &rt, 0.05, NumericTest::Welch).unwrap();
        assert_eq!(r.flagged_columns, vec!["x".to_string()]);
        assert!(r.min_adjusted_p < 1e-6);
        let r = representativeness(&dev, &rt, 0.05, NumericTest::KolmogorovSmirnov).unwrap();
        assert_eq!(r.flagged_columns, vec!["x".to_string()]);
    }

    #[test]
    fn representativeness_needs_comparable_columns() {
        let t = Column::text("t", vec![Some("hello".into()), Some("world".into())]);
        let d = dataset(vec![t]);
        assert!(matches!(
            representativeness(&d, &d, 0.05, NumericTest::Welch),
            Err(Error::NoComparableColumns)
        ));
    }

    #[test]
    fn correctness_examples() {
        let mut spike = vec![0.0; 9];
        spike.push(1000.0);
        let d = dataset(vec![num("x", &spike), num("flat", &[1.0; 10])]);
        // with n = 10 the largest attainable |z| is (n-1)/sqrt(n) < 3
        assert_eq!(data_correctness(&d, 3.0, ExecMode::Sequential).unwrap().outlier_count, 0);
        let r = data_correctness(&d, 2.5, ExecMode::Parallel).unwrap();
        assert_eq!(r.outlier_count, 1);
        assert_eq!(r.outliers[0].row, Some(9));
        assert_eq!(r.notices.len(), 1);
        assert_eq!(r.outlier_fraction, 1.0 / 20.0);
        let calm = dataset(vec![num("x", &[1.0, 2.0, 3.0, 4.0])]);
        assert_eq!(data_correctness(&calm, 3.0, ExecMode::Sequential).unwrap().outlier_fraction, 0.0);
        assert!(matches!(
            data_correctness(&labeled(&["a"], None), 3.0, ExecMode::Sequential),
            Err(Error::NoNumericColumns)
        ));
    }

    #[test]
    fn completeness_examples() {
        let mut v: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        v[3] = None;
        v[7] = None;
        let full = num("b", &[0.0; 10]);
        let d = dataset(vec![Column::numeric("a", v), full]);
        let c = completeness(&d).unwrap();
        assert!((c.completeness - 0.9).abs() < 1e-15);
        assert_eq!(c.completeness + c.missing_fraction, 1.0);
        let empty = dataset(vec![Column::numeric("a", vec![None; 4])]);
        assert_eq!(completeness(&empty).unwrap().completeness, 0.0);
    }

    fn stamped(days_old: &[i64]) -> Dataset {
        let ts: Vec<Option<NaiveDateTime>> = days_old
            .iter()
            .map(|&d| Some((date() - chrono::Duration::days(d)).and_hms_opt(12, 0, 0).unwrap()))
            .collect();
        let cols = vec![Column::timestamp("t", ts)];
        let mut m = DataManifest::new(DatasetRole::Development, vec![ColumnSpec::new("t", ColumnType::Timestamp)], date());
        m.timestamp_column = Some("t".into());
        Dataset::new(m, cols).unwrap()
    }

    #[test]
    fn currentness_examples() {
        let r = currentness(&stamped(&[0, 0])).unwrap();
        assert_eq!((r.median_age_days, r.max_age_days), (0.0, 0));
        let r = currentness(&stamped(&[10, 30])).unwrap();
        assert_eq!((r.median_age_days, r.max_age_days), (20.0, 30));
        let r = currentness(&stamped(&[-3, 5])).unwrap();
        assert_eq!(r.future.len(), 1);
        assert!(matches!(
            currentness(&dataset(vec![num("x", &[1.0])])),
            Err(Error::MissingColumn("timestamp"))
        ));
    }

    #[test]
    fn intra_consistency_examples() {
        let d = dataset(vec![
            num("x", &[1.0, 12.0, 5.0]),
            Column::text("t", vec![Some("a b".into()), Some("a".into()), Some("a b c".into())]),
            cat("c", &["p", "q", "zz"]),
        ]);
        let range = ConsistencyRule::Range {
            column: "x".into(),
            min: 0.0,
            max: 10.0,
        };
        let words = ConsistencyRule::WordCount {
            column: "t".into(),
            min: 1,
            max: 2,
        };
        let vocab = ConsistencyRule::Vocabulary {
            column: "c".into(),
            values: ["p".to_string(), "q".to_string()].into(),
        };
        let r = intra_consistency(&d, &[range.clone()]).unwrap();
        assert_eq!(r.violation_count, 1);
        assert_eq!((r.violations[0].row, r.violations[0].column.as_deref()), (Some(1), Some("x")));
        let r = intra_consistency(&d, &[words, vocab, range]).unwrap();
        assert_eq!(r.violation_count, 3);
        assert_eq!(r.violations[1].value, Some(super::super::MetricValue::Count(3)));
        assert_eq!(r.violations[1].row, Some(2));
        let bad = ConsistencyRule::Range {
            column: "nope".into(),
            min: 0.0,
            max: 1.0,
        };
        assert!(matches!(intra_consistency(&d, &[bad]), Err(Error::UnknownColumnInRule(c)) if c == "nope"));
        let ok = dataset(vec![num("x", &[1.0, 2.0])]);
        let rule = ConsistencyRule::Range {
            column: "x".into(),
            min: 0.0,
            max: 10.0,
        };
        assert_eq!(intra_consistency(&ok, &[rule]).unwrap().violation_count, 0);
    }

    #[test]
    fn rules_parse_from_json() {
        let rules: Vec<ConsistencyRule> = serde_json::from_str(
            r#"[{"kind":"range","column":"x","min":0,"max":1},
                {"kind":"vocabulary","column":"c","values":["a"]},
                {"kind":"word_count","column":"t","min":0,"max":3}]"#,
        )
        .unwrap();
        assert_eq!(rules.len(), 3);
        assert!(ConsistencyRule::Range {
            column: "x".into(),
            min: 2.0,
            max: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn independence_examples() {
        let train = dataset(vec![num("x", &(0..20).map(f64::from).collect::<Vec<_>>())]);
        let test_xs: Vec<f64> = (100..110).map(f64::from).collect();
        let r = train_test_independence(&train, &dataset(vec![num("x", &test_xs)]), ExecMode::Sequential).unwrap();
        assert_eq!((r.exact_overlap, r.near_overlap), (0.0, 0.0));
        let mut dup = test_xs.clone();
        dup[4] = 7.0;
        let r = train_test_independence(&train, &dataset(vec![num("x", &dup)]), ExecMode::Sequential).unwrap();
        assert_eq!(r.exact_overlap, 0.1);
        let sd = stats::sample_std(&(0..20).map(f64::from).collect::<Vec<_>>());
        dup[4] = 7.0 + 1e-4 * sd;
        let r = train_test_independence(&train, &dataset(vec![num("x", &dup)]), ExecMode::Parallel).unwrap();
        assert_eq!((r.exact_overlap, r.near_overlap), (0.0, 0.1));
    }

    #[test]
    fn balancedness_examples() {
        let r = balancedness(&labeled(&repeat(&[("a", 50), ("b", 50)]), None), None).unwrap();
        assert_eq!((r.normalized_entropy, r.imbalance_ratio), (1.0, 1.0));
        let r = balancedness(&labeled(&repeat(&[("a", 90), ("b", 10)]), None), None).unwrap();
        let h = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln()) / 2f64.ln();
        assert!((r.normalized_entropy - h).abs() < 1e-12 && (h - 0.469).abs() < 1e-3);
        assert_eq!(r.imbalance_ratio, 9.0);
        let r = balancedness(&labeled(&["a", "a"], None), None).unwrap();
        assert_eq!((r.normalized_entropy, r.imbalance_ratio), (1.0, 1.0));
        assert_eq!(r.notices.len(), 1);
        let vocab = vec!["a".to_string(), "b".to_string()];
        let r = balancedness(&labeled(&["a", "a"], None), Some(&vocab)).unwrap();
        assert_eq!((r.normalized_entropy, r.imbalance_ratio), (0.0, f64::INFINITY));
    }

    #[test]
    fn bias_examples() {
        let labels = repeat(&[("y", 3), ("n", 7), ("y", 3), ("n", 7)]);
        let groups = repeat(&[("g1", 10), ("g2", 10)]);
        assert_eq!(absence_of_bias(&labeled(&labels, Some(&groups)), "y").unwrap().max_positive_rate_gap, 0.0);
        let labels = repeat(&[("y", 6), ("n", 4), ("y", 2), ("n", 8)]);
        let r = absence_of_bias(&labeled(&labels, Some(&groups)), "y").unwrap();
        assert_eq!(r.max_positive_rate_gap, 0.4);
        let labels = repeat(&[("y", 5), ("n", 5), ("y", 3), ("n", 7), ("y", 2), ("n", 8)]);
        let groups3 = repeat(&[("a", 10), ("b", 10), ("c", 10)]);
        let r = absence_of_bias(&labeled(&labels, Some(&groups3)), "y").unwrap();
        // brute force over all pairs
        let rates = [0.5f64, 0.3, 0.2];
        let brute = rates
            .iter()
            .flat_map(|a| rates.iter().map(move |b| (a - b).abs()))
            .fold(0.0, f64::max);
        assert!((r.max_positive_rate_gap - brute).abs() < 1e-12);
        assert_eq!(r.max_positive_rate_gap, 0.3);
        let multi = repeat(&[("a", 2), ("b", 2), ("c", 2)]);
        let g = repeat(&[("g1", 3), ("g2", 3)]);
        assert!(matches!(
            absence_of_bias(&labeled(&multi, Some(&g)), "a"),
            Err(Error::NonBinaryLabel(_))
        ));
        assert!(matches!(
            absence_of_bias(&labeled(&["a"], None), "a"),
            Err(Error::MissingColumn("group"))
        ));
    }

    #[test]
    fn inter_consistency_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..1.0)).collect();
        let cats: Vec<&str> = (0..300).map(|i| ["a", "b"][i % 2]).collect();
        let dev = dataset(vec![num("x", &x), cat("c", &cats)]);
        let r = inter_consistency(&dev, &dev, 3.0).unwrap();
        assert!(r.range_mismatches.is_empty() && r.unseen_categories.is_empty());
        assert_eq!(r.crosswise_outlier_fraction, 0.0);

        let mut cats2 = cats.clone();
        cats2[0] = "Z";
        let sd = stats::sample_std(&x);
        let shifted: Vec<f64> = x.iter().map(|v| v + 10.0 * sd).collect();
        let rt = dataset(vec![num("x", &shifted), cat("c", &cats2)]);
        let r = inter_consistency(&dev, &rt, 3.0).unwrap();
        assert_eq!(r.unseen_categories.len(), 1);
        assert!(r.crosswise_outlier_fraction > 0.99);
    }
}
