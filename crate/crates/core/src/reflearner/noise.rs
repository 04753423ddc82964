use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Column, ColumnValues, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    FeatureNoise,
    LabelNoise,
    MissingInjection,
}

impl NoiseKind {
    pub fn from_param(s: &str) -> Option<NoiseKind> {
        match s {
            "feature" => Some(NoiseKind::FeatureNoise),
            "label" => Some(NoiseKind::LabelNoise),
            "missing" => Some(NoiseKind::MissingInjection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    pub seed: u64,
}

fn count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).round() as usize).min(n)
}

/// Returns a copy of `d` with exactly `round(rate · eligible)` cells or labels perturbed.
///
/// Feature noise redraws non-missing numeric feature cells uniformly from the
/// column's observed range. Label noise moves labels to a different observed
/// class. Missing injection blanks non-missing cells outside the label and
/// subset columns.
pub fn inject_noise(d: &Dataset, spec: NoiseSpec) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::InvalidArgument(format!("noise rate {} outside [0, 1]", spec.rate)));
    }
    if spec.rate == 0.0 {
        return Ok(d.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let manifest = d.manifest();
    let mut columns: Vec<Column> = d.columns().to_vec();
    match spec.kind {
        NoiseKind::FeatureNoise => {
            let mut cells = Vec::new();
            let mut ranges = Vec::new();
            for (j, c) in columns.iter().enumerate() {
                if manifest.is_role_column(&c.name) {
                    continue;
                }
                if let ColumnValues::Numeric(v) = &c.values {
                    let xs = c.observed_numbers();
                    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    ranges.push((j, lo, hi));
                    cells.extend((0..v.len()).filter(|&i| v[i].is_some()).map(|i| (j, i)));
                }
            }
            let mut picked: Vec<usize> = sample(&mut rng, cells.len(), count(spec.rate, cells.len())).into_vec();
            picked.sort_unstable();
            for p in picked {
                let (j, i) = cells[p];
                let &(_, lo, hi) = ranges.iter().find(|r| r.0 == j).expect("range recorded");
                let draw = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                if let ColumnValues::Numeric(v) = &mut columns[j].values {
                    v[i] = Some(draw);
                }
            }
        }
        NoiseKind::LabelNoise => {
            let label = manifest.label_column.as_deref().ok_or(Error::MissingColumn("label"))?;
            let j = columns.iter().position(|c| c.name == label).expect("label column exists");
            let ColumnValues::Categorical(v) = &mut columns[j].values else {
                return Err(Error::SchemaMismatch("label column is not categorical".into()));
            };
            let classes: Vec<String> = v.iter().flatten().collect::<BTreeSet<_>>().into_iter().cloned().collect();
            if classes.len() < 2 {
                return Err(Error::SingleClass);
            }
            let rows: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
            let mut picked: Vec<usize> = sample(&mut rng, rows.len(), count(spec.rate, rows.len())).into_vec();
            picked.sort_unstable();
            for p in picked {
                let i = rows[p];
                let current = v[i].as_ref().expect("labeled");
                let others: Vec<&String> = classes.iter().filter(|c| *c != current).collect();
                v[i] = Some(others[rng.random_range(0..others.len())].clone());
            }
        }
        NoiseKind::MissingInjection => {
            let protected = [manifest.label_column.as_deref(), manifest.subset_column.as_deref()];
            let mut cells = Vec::new();
            for (j, c) in columns.iter().enumerate() {
                if protected.contains(&Some(c.name.as_str())) {
                    continue;
                }
                cells.extend((0..c.len()).filter(|&i| !c.is_missing(i)).map(|i| (j, i)));
            }
            let picked = sample(&mut rng, cells.len(), count(spec.rate, cells.len()));
            for p in picked {
                let (j, i) = cells[p];
                match &mut columns[j].values {
                    ColumnValues::Numeric(v) => v[i] = None,
                    ColumnValues::Categorical(v) | ColumnValues::Text(v) => v[i] = None,
                    ColumnValues::Timestamp(v) => v[i] = None,
                }
            }
        }
    }
    d.with_columns(columns)
}
