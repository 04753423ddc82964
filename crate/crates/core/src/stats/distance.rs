use std::collections::{BTreeMap, HashSet};

use super::{mean, sample_std};
use crate::dataio::{ColumnValues, Dataset};
use crate::error::{Error, Result};
use crate::exec::{map_range, ExecMode};

/// Standard scores with the n−1 standard deviation.
pub fn zscores(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "z-scores need at least 2 values, got {}",
            x.len()
        )));
    }
    let m = mean(x);
    let s = sample_std(x);
    if s == 0.0 || !s.is_finite() {
        return Err(Error::DegenerateSample("z-scores of a constant sequence".into()));
    }
    Ok(x.iter().map(|v| (v - m) / s).collect())
}

/// Shannon entropy of the count distribution divided by ln k; 1 for k = 1.
pub fn normalized_entropy(counts: &BTreeMap<String, u64>) -> Result<f64> {
    let total: u64 = counts.values().sum();
    if counts.is_empty() || total == 0 {
        return Err(Error::EmptyInput("entropy of an empty distribution".into()));
    }
    let k = counts.len();
    if k == 1 {
        return Ok(1.0);
    }
    let total = total as f64;
    let h: f64 = counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    Ok((h / (k as f64).ln()).clamp(0.0, 1.0))
}

/// Column-wise centering and scaling fitted on a reference matrix. Columns
/// with zero or undefined spread are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl Standardizer {
    pub fn fit(reference: &[Vec<f64>]) -> Result<Self> {
        let d = check_rectangular(reference, None)?;
        let mut s = Standardizer {
            means: Vec::with_capacity(d),
            stds: Vec::with_capacity(d),
            kept: Vec::new(),
            dropped: Vec::new(),
        };
        for j in 0..d {
            let col: Vec<f64> = reference.iter().map(|r| r[j]).collect();
            let sd = sample_std(&col);
            s.means.push(mean(&col));
            s.stds.push(sd);
            if sd > 0.0 && sd.is_finite() {
                s.kept.push(j);
            } else {
                s.dropped.push(j);
            }
        }
        Ok(s)
    }

    /// Identity transform that keeps every column.
    pub fn identity(d: usize) -> Self {
        Standardizer {
            means: vec![0.0; d],
            stds: vec![1.0; d],
            kept: (0..d).collect(),
            dropped: Vec::new(),
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .map(|&j| (row[j] - self.means[j]) / self.stds[j])
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

fn check_rectangular(rows: &[Vec<f64>], expect: Option<usize>) -> Result<usize> {
    let d = expect.or_else(|| rows.first().map(Vec::len)).unwrap_or(0);
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "row {bad} has {} columns, expected {d}",
            rows[bad].len()
        )));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnOptions {
    pub k: usize,
    /// Scale columns by the reference mean and standard deviation first.
    pub standardize: bool,
}

impl KnnOptions {
    pub fn new(k: usize) -> Self {
        KnnOptions { k, standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    /// Distance of each query to its k-th nearest reference row.
    pub distances: Vec<f64>,
    /// Indices of zero-spread columns left out of the distance.
    pub dropped_columns: Vec<usize>,
}

fn kth_smallest_sq(reference: &[Vec<f64>], q: &[f64], k: usize, skip: Option<usize>) -> f64 {
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (i, r) in reference.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d2: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.len() < k || d2 < best[k - 1] {
            let pos = best.partition_point(|&v| v <= d2);
            best.insert(pos, d2);
            best.truncate(k);
        }
    }
    best[k - 1]
}

fn prepare(reference: &[Vec<f64>], standardize: bool) -> Result<Standardizer> {
    let d = check_rectangular(reference, None)?;
    let s = if standardize {
        Standardizer::fit(reference)?
    } else {
        Standardizer::identity(d)
    };
    if s.kept.is_empty() {
        return Err(Error::DegenerateSample(
            "no column with nonzero spread for distances".into(),
        ));
    }
    Ok(s)
}

/// Euclidean distance of each query to its k-th nearest reference row.
pub fn knn_distances(
    reference: &[Vec<f64>],
    queries: &[Vec<f64>],
    opts: KnnOptions,
    mode: ExecMode,
) -> Result<KnnResult> {
    if opts.k == 0 || opts.k > reference.len() {
        return Err(Error::TooFewRows {
            needed: opts.k.max(1),
            available: reference.len(),
        });
    }
    let s = prepare(reference, opts.standardize)?;
    check_rectangular(queries, Some(reference[0].len()))?;
    let r = s.transform(reference);
    let q = s.transform(queries);
    let distances = map_range(mode, q.len(), |i| kth_smallest_sq(&r, &q[i], opts.k, None).sqrt());
    Ok(KnnResult {
        distances,
        dropped_columns: s.dropped,
    })
}

/// Distance of every reference row to its k-th nearest other reference row.
pub fn knn_self_distances(reference: &[Vec<f64>], opts: KnnOptions, mode: ExecMode) -> Result<KnnResult> {
    if opts.k == 0 || opts.k >= reference.len() {
        return Err(Error::TooFewRows {
            needed: opts.k.max(1) + 1,
            available: reference.len(),
        });
    }
    let s = prepare(reference, opts.standardize)?;
    let r = s.transform(reference);
    let distances = map_range(mode, r.len(), |i| kth_smallest_sq(&r, &r[i], opts.k, Some(i)).sqrt());
    Ok(KnnResult {
        distances,
        dropped_columns: s.dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuplicateOverlap {
    pub exact_fraction: f64,
    pub near_fraction: f64,
    pub exact_count: usize,
    pub near_count: usize,
    pub n: usize,
}

/// Threshold on the combined normalized row distance below which two rows are near duplicates.
pub const NEAR_DUPLICATE_DISTANCE: f64 = 0.01;

/// Fraction of rows of `b` that also occur in `a`, exactly and approximately.
///
/// Rows are compared on every column except the subset column. The near
/// distance averages squared standardized numeric differences (scaled by the
/// spread in `a`) and 0/1 mismatches of the other cells over the compared
/// columns, then takes the square root.
pub fn duplicate_overlap(a: &Dataset, b: &Dataset, mode: ExecMode) -> Result<DuplicateOverlap> {
    let spec_a = &a.manifest().columns;
    let spec_b = &b.manifest().columns;
    if spec_a != spec_b {
        return Err(Error::SchemaMismatch(
            "duplicate detection needs identical column lists".into(),
        ));
    }
    if b.n_rows() == 0 {
        return Err(Error::EmptyInput("no rows to compare".into()));
    }
    let subset = a.manifest().subset_column.as_deref();
    let cols: Vec<usize> = (0..a.n_cols())
        .filter(|&j| Some(a.columns()[j].name.as_str()) != subset)
        .collect();
    if cols.is_empty() {
        return Err(Error::SchemaMismatch("no columns to compare".into()));
    }

    let canonical = |d: &Dataset, row: usize| -> String {
        let mut s = String::new();
        for &j in &cols {
            s.push_str(&d.columns()[j].canonical_cell(row));
            s.push('\u{1f}');
        }
        s
    };
    let a_rows: HashSet<String> = (0..a.n_rows()).map(|i| canonical(a, i)).collect();
    let exact: Vec<bool> = map_range(mode, b.n_rows(), |i| a_rows.contains(&canonical(b, i)));

    let spreads: Vec<Option<f64>> = cols
        .iter()
        .map(|&j| match &a.columns()[j].values {
            ColumnValues::Numeric(_) => {
                let sd = sample_std(&a.columns()[j].observed_numbers());
                (sd > 0.0 && sd.is_finite()).then_some(sd)
            }
            _ => None,
        })
        .collect();
    let n_cols = cols.len() as f64;
    let limit_sq = NEAR_DUPLICATE_DISTANCE * NEAR_DUPLICATE_DISTANCE * n_cols;
    let row_distance_sq = |ra: usize, rb: usize| -> f64 {
        let mut acc = 0.0;
        for (c, &j) in cols.iter().enumerate() {
            let (ca, cb) = (&a.columns()[j], &b.columns()[j]);
            acc += match (&ca.values, &cb.values, spreads[c]) {
                (ColumnValues::Numeric(va), ColumnValues::Numeric(vb), Some(sd)) => match (va[ra], vb[rb]) {
                    (Some(x), Some(y)) => ((x - y) / sd).powi(2),
                    (None, None) => 0.0,
                    _ => 1.0,
                },
                _ => {
                    if ca.canonical_cell(ra) == cb.canonical_cell(rb) {
                        0.0
                    } else {
                        1.0
                    }
                }
            };
            if acc >= limit_sq {
                break;
            }
        }
        acc
    };
    let near: Vec<bool> = map_range(mode, b.n_rows(), |i| {
        exact[i] || (0..a.n_rows()).any(|r| row_distance_sq(r, i) < limit_sq)
    });

    let n = b.n_rows();
    let exact_count = exact.iter().filter(|&&e| e).count();
    let near_count = near.iter().filter(|&&e| e).count();
    Ok(DuplicateOverlap {
        exact_fraction: exact_count as f64 / n as f64,
        near_fraction: near_count as f64 / n as f64,
        exact_count,
        near_count,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{Column, ColumnSpec, ColumnType, DataManifest, DatasetRole};
    use chrono::NaiveDate;

    #[test]
    fn zscore_examples() {
        let z = zscores(&[1.0, 1.0, 1.0, 1.0, 9.0]).unwrap();
        assert!((z[4] - 6.4 / (51.2f64 / 4.0).sqrt()).abs() < 1e-12);
        assert!((z[4] - 1.789).abs() < 1e-3);
        assert!(z.iter().sum::<f64>().abs() < 1e-9);
        let x = [3.0, -1.0, 4.5, 10.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        for (a, b) in zscores(&x).unwrap().iter().zip(zscores(&y).unwrap()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(zscores(&[2.0, 2.0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let c = |pairs: &[(&str, u64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        assert!((normalized_entropy(&c(&[("a", 50), ("b", 50)])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(normalized_entropy(&c(&[("a", 100), ("b", 0)])).unwrap(), 0.0);
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln()) / 2f64.ln();
        let v = normalized_entropy(&c(&[("a", 75), ("b", 25)])).unwrap();
        assert!((v - h).abs() < 1e-12 && (v - 0.811).abs() < 1e-3);
        assert_eq!(normalized_entropy(&c(&[("only", 4)])).unwrap(), 1.0);
        assert!(normalized_entropy(&BTreeMap::new()).is_err());
    }

    fn square() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]
    }

    #[test]
    fn knn_unit_square_center() {
        let raw = KnnOptions { k: 1, standardize: false };
        let r = knn_distances(&square(), &[vec![0.5, 0.5]], raw, ExecMode::Sequential).unwrap();
        assert!((r.distances[0] - 2f64.sqrt() / 2.0).abs() < 1e-12);
        // corners standardize to ±√3/2, so the center sits √1.5 from each
        let r = knn_distances(&square(), &[vec![0.5, 0.5]], KnnOptions::new(1), ExecMode::Sequential).unwrap();
        assert!((r.distances[0] - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn knn_self_excludes_own_row() {
        let raw = KnnOptions { k: 1, standardize: false };
        let r = knn_self_distances(&square(), raw, ExecMode::Sequential).unwrap();
        assert_eq!(r.distances, vec![1.0; 4]);
        let r = knn_self_distances(&square(), KnnOptions { k: 3, standardize: false }, ExecMode::Parallel).unwrap();
        assert!((r.distances[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn knn_guards() {
        let o = KnnOptions::new(5);
        assert!(matches!(
            knn_distances(&square(), &[vec![0.0, 0.0]], o, ExecMode::Sequential),
            Err(Error::TooFewRows { .. })
        ));
        assert!(matches!(
            knn_distances(&square(), &[vec![0.0]], KnnOptions::new(1), ExecMode::Sequential),
            Err(Error::DimensionMismatch(_))
        ));
        let flat = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]];
        let r = knn_self_distances(&flat, KnnOptions::new(1), ExecMode::Sequential).unwrap();
        assert_eq!(r.dropped_columns, vec![0]);
    }

    fn table(xs: &[f64], cats: &[&str]) -> Dataset {
        let m = DataManifest::new(
            DatasetRole::Development,
            vec![
                ColumnSpec::new("x", ColumnType::Numeric),
                ColumnSpec::new("c", ColumnType::Categorical),
            ],
            NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        );
        Dataset::new(
            m,
            vec![
                Column::numeric("x", xs.iter().map(|v| Some(*v)).collect()),
                Column::categorical("c", cats.iter().map(|v| Some(v.to_string())).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn overlap_examples() {
        let a = table(&[1.0, 2.0, 3.0, 4.0], &["p", "q", "p", "q"]);
        let disjoint = table(&[10.0, 20.0], &["r", "s"]);
        let o = duplicate_overlap(&a, &disjoint, ExecMode::Sequential).unwrap();
        assert_eq!((o.exact_fraction, o.near_fraction), (0.0, 0.0));
        let sub = table(&[2.0, 3.0], &["q", "p"]);
        assert_eq!(duplicate_overlap(&a, &sub, ExecMode::Sequential).unwrap().exact_fraction, 1.0);

        let sd = sample_std(&[1.0, 2.0, 3.0, 4.0]);
        let perturbed = table(&[1.0 + 1e-6 * sd, 2.0, 3.0, 4.0], &["p", "q", "p", "q"]);
        let o = duplicate_overlap(&a, &perturbed, ExecMode::Parallel).unwrap();
        assert_eq!(o.near_fraction, 1.0);
        assert_eq!(o.exact_fraction, 0.75);
    }
}
