//! Reference learners for metrics that need retraining: Gaussian naive Bayes
//! and k-nearest neighbours, plus noise injection and k-fold / leave-one-out
//! resampling that emit retrain prediction sets.

mod noise;
mod resample;

pub use noise::{inject_noise, NoiseKind, NoiseSpec};
pub use resample::{run_kfold, run_loo, LooOutcome};

use std::collections::BTreeSet;

use crate::dataio::{ColumnValues, Dataset, PredictionRow, PredictionTable};
use crate::error::{Error, Result};
use crate::stats::Standardizer;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Learner {
    GaussianNb,
    Knn { k: usize },
}

impl Learner {
    /// Parses the `learner` metric parameter.
    pub fn from_param(name: &str, knn_k: usize) -> Option<Learner> {
        match name {
            "gaussian_nb" => Some(Learner::GaussianNb),
            "knn" => Some(Learner::Knn { k: knn_k }),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Learner::GaussianNb => "gaussian_nb",
            Learner::Knn { .. } => "knn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Feature {
    Numeric { column: String, fill: f64 },
    OneHot { column: String, vocabulary: Vec<String> },
}

/// Maps dataset rows to numeric feature vectors. Numeric columns are imputed
/// with the training mean; categorical columns are one-hot encoded over the
/// training vocabulary. Text, timestamp, label and subset columns are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    features: Vec<Feature>,
}

impl FeatureEncoder {
    pub fn fit(d: &Dataset) -> Self {
        let mut features = Vec::new();
        for c in d.columns() {
            if d.manifest().is_role_column(&c.name) {
                continue;
            }
            match &c.values {
                ColumnValues::Numeric(_) => {
                    let xs = c.observed_numbers();
                    let fill = if xs.is_empty() { 0.0 } else { crate::stats::mean(&xs) };
                    features.push(Feature::Numeric {
                        column: c.name.clone(),
                        fill,
                    });
                }
                ColumnValues::Categorical(v) => {
                    let vocabulary: BTreeSet<&String> = v.iter().flatten().collect();
                    features.push(Feature::OneHot {
                        column: c.name.clone(),
                        vocabulary: vocabulary.into_iter().cloned().collect(),
                    });
                }
                _ => {}
            }
        }
        FeatureEncoder { features }
    }

    pub fn width(&self) -> usize {
        self.features
            .iter()
            .map(|f| match f {
                Feature::Numeric { .. } => 1,
                Feature::OneHot { vocabulary, .. } => vocabulary.len(),
            })
            .sum()
    }

    pub fn encode(&self, d: &Dataset) -> Result<Vec<Vec<f64>>> {
        let mut rows = vec![Vec::with_capacity(self.width()); d.n_rows()];
        for f in &self.features {
            match f {
                Feature::Numeric { column, fill } => {
                    let v = d
                        .column(column)
                        .and_then(|c| c.as_numeric())
                        .ok_or_else(|| Error::SchemaMismatch(format!("numeric feature \"{column}\" missing")))?;
                    for (row, x) in rows.iter_mut().zip(v) {
                        row.push(x.unwrap_or(*fill));
                    }
                }
                Feature::OneHot { column, vocabulary } => {
                    let c = d.column(column).filter(|c| matches!(c.values, ColumnValues::Categorical(_)));
                    let v = c
                        .and_then(|c| c.as_strings())
                        .ok_or_else(|| Error::SchemaMismatch(format!("categorical feature \"{column}\" missing")))?;
                    for (row, x) in rows.iter_mut().zip(v) {
                        let hot = x.as_ref().and_then(|x| vocabulary.binary_search(x).ok());
                        row.extend((0..vocabulary.len()).map(|i| if Some(i) == hot { 1.0 } else { 0.0 }));
                    }
                }
            }
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameters {
    GaussianNb {
        priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    Knn {
        k: usize,
        standardizer: Standardizer,
        matrix: Vec<Vec<f64>>,
        labels: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedReferenceModel {
    pub learner: Learner,
    pub classes: Vec<String>,
    pub encoder: FeatureEncoder,
    pub parameters: Parameters,
}

/// Fits a reference learner on the labeled rows of `d`.
pub fn train(learner: Learner, d: &Dataset) -> Result<TrainedReferenceModel> {
    let labels = d.labels()?;
    let rows: Vec<usize> = (0..d.n_rows()).filter(|&i| labels[i].is_some()).collect();
    if rows.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let d = if rows.len() == d.n_rows() { d.clone() } else { d.select_rows(&rows) };
    let labels = d.labels()?;
    let classes: Vec<String> = labels.iter().flatten().collect::<BTreeSet<_>>().into_iter().cloned().collect();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l.as_ref().expect("labeled")).expect("known class"))
        .collect();
    let encoder = FeatureEncoder::fit(&d);
    let x = encoder.encode(&d)?;
    let parameters = match learner {
        Learner::GaussianNb => {
            if classes.len() < 2 {
                return Err(Error::SingleClass);
            }
            fit_gaussian_nb(&x, &y, classes.len(), encoder.width())
        }
        Learner::Knn { k } => {
            if k == 0 {
                return Err(Error::BadParameter("k-NN needs k >= 1".into()));
            }
            let standardizer = Standardizer::fit(&x)?;
            Parameters::Knn {
                k,
                matrix: standardizer.transform(&x),
                standardizer,
                labels: y,
            }
        }
    };
    Ok(TrainedReferenceModel {
        learner,
        classes,
        encoder,
        parameters,
    })
}

fn fit_gaussian_nb(x: &[Vec<f64>], y: &[usize], n_classes: usize, width: usize) -> Parameters {
    let mut priors = Vec::with_capacity(n_classes);
    let mut means = Vec::with_capacity(n_classes);
    let mut variances = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let members: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        priors.push(members.len() as f64 / x.len() as f64);
        let mut mu = Vec::with_capacity(width);
        let mut var = Vec::with_capacity(width);
        for j in 0..width {
            let col: Vec<f64> = members.iter().map(|r| r[j]).collect();
            mu.push(crate::stats::mean(&col));
            let v = crate::stats::sample_variance(&col);
            var.push(if v.is_nan() { VARIANCE_FLOOR } else { v.max(VARIANCE_FLOOR) });
        }
        means.push(mu);
        variances.push(var);
    }
    Parameters::GaussianNb {
        priors,
        means,
        variances,
    }
}

impl TrainedReferenceModel {
    /// Winning class index and its score for one encoded row.
    fn classify(&self, row: &[f64]) -> (usize, f64) {
        match &self.parameters {
            Parameters::GaussianNb {
                priors,
                means,
                variances,
            } => {
                let logp: Vec<f64> = (0..self.classes.len())
                    .map(|c| {
                        priors[c].ln()
                            + row
                                .iter()
                                .zip(&means[c])
                                .zip(&variances[c])
                                .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v))
                                .sum::<f64>()
                    })
                    .collect();
                let best = argmax_first(&logp);
                let norm: f64 = logp.iter().map(|l| (l - logp[best]).exp()).sum();
                (best, 1.0 / norm)
            }
            Parameters::Knn {
                k,
                standardizer,
                matrix,
                labels,
            } => {
                let q = standardizer.transform_row(row);
                let mut d: Vec<(f64, usize)> = matrix
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
                    .collect();
                let k = (*k).min(d.len());
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut votes = vec![0.0; self.classes.len()];
                for &(_, i) in &d[..k] {
                    votes[labels[i]] += 1.0;
                }
                let best = argmax_first(&votes);
                (best, votes[best] / k as f64)
            }
        }
    }

    /// Predicts every row of `d`, naming instances by row index.
    pub fn predict(&self, d: &Dataset) -> Result<PredictionTable> {
        let ids: Vec<String> = (0..d.n_rows()).map(|i| i.to_string()).collect();
        self.predict_with_ids(d, &ids)
    }

    pub fn predict_with_ids(&self, d: &Dataset, ids: &[String]) -> Result<PredictionTable> {
        let x = self.encoder.encode(d)?;
        let truth = d.labels().ok();
        let rows = x
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let (c, score) = self.classify(row);
                PredictionRow {
                    instance_id: ids[i].clone(),
                    true_label: truth.and_then(|t| t[i].clone()),
                    predicted_label: self.classes[c].clone(),
                    score: Some(score.clamp(0.0, 1.0)),
                    group: None,
                    supervisor_flag: None,
                    context_changed: None,
                }
            })
            .collect();
        PredictionTable::new(rows)
    }
}

/// Index of the largest value; the first one on ties.
fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn predict(m: &TrainedReferenceModel, d: &Dataset) -> Result<PredictionTable> {
    m.predict(d)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataio::{Column, ColumnSpec, ColumnType, DataManifest, DatasetRole};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Two Gaussian blobs, class "a" around (0, 0) and "b" around (sep, sep).
    pub(crate) fn blobs(n: usize, sep: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = if i % 2 == 0 { 0.0 } else { sep };
            x1.push(Some(c + noise.sample(&mut rng)));
            x2.push(Some(c + noise.sample(&mut rng)));
            y.push(Some(if i % 2 == 0 { "a" } else { "b" }.to_string()));
        }
        let mut m = DataManifest::new(
            DatasetRole::Development,
            vec![
                ColumnSpec::new("x1", ColumnType::Numeric),
                ColumnSpec::new("x2", ColumnType::Numeric),
                ColumnSpec::new("y", ColumnType::Categorical),
            ],
            chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        );
        m.label_column = Some("y".into());
        Dataset::new(
            m,
            vec![Column::numeric("x1", x1), Column::numeric("x2", x2), Column::categorical("y", y)],
        )
        .unwrap()
    }

    fn points(xs: &[(f64, &str)]) -> Dataset {
        let mut m = DataManifest::new(
            DatasetRole::Development,
            vec![ColumnSpec::new("x", ColumnType::Numeric), ColumnSpec::new("y", ColumnType::Categorical)],
            chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        );
        m.label_column = Some("y".into());
        Dataset::new(
            m,
            vec![
                Column::numeric("x", xs.iter().map(|p| Some(p.0)).collect()),
                Column::categorical("y", xs.iter().map(|p| Some(p.1.to_string())).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn nb_on_blobs() {
        let d = blobs(200, 8.0, 1);
        let m = train(Learner::GaussianNb, &d).unwrap();
        assert_eq!(m.classes, vec!["a".to_string(), "b".to_string()]);
        let Parameters::GaussianNb { priors, variances, .. } = &m.parameters else {
            panic!("expected naive Bayes parameters")
        };
        assert!((priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(variances.iter().flatten().all(|&v| v >= VARIANCE_FLOOR));
        let p = m.predict(&d).unwrap();
        assert!(crate::metrics::model::goodness_of_fit(&p).unwrap().accuracy > 0.99);
        assert_eq!(train(Learner::GaussianNb, &d).unwrap(), m);
    }

    #[test]
    fn nb_permutation_invariant() {
        let d = blobs(60, 3.0, 9);
        let rev: Vec<usize> = (0..60).rev().collect();
        let a = train(Learner::GaussianNb, &d).unwrap();
        let b = train(Learner::GaussianNb, &d.select_rows(&rev)).unwrap();
        let (Parameters::GaussianNb { means: ma, variances: va, .. }, Parameters::GaussianNb { means: mb, variances: vb, .. }) =
            (&a.parameters, &b.parameters)
        else {
            panic!("expected naive Bayes parameters")
        };
        for (x, y) in ma.iter().flatten().zip(mb.iter().flatten()).chain(va.iter().flatten().zip(vb.iter().flatten())) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn nb_single_class() {
        let d = points(&[(1.0, "a"), (2.0, "a")]);
        assert!(matches!(train(Learner::GaussianNb, &d), Err(Error::SingleClass)));
    }

    #[test]
    fn knn_contracts() {
        let d = points(&[(0.0, "a"), (1.0, "b"), (5.0, "a"), (6.0, "b")]);
        let m = train(Learner::Knn { k: 1 }, &d).unwrap();
        let p = m.predict(&d).unwrap();
        assert!(p.rows().iter().all(|r| r.is_correct() == Some(true)));
        let m = train(Learner::Knn { k: 2 }, &d).unwrap();
        let q = points(&[(0.5, "a"), (5.5, "b")]);
        let p = m.predict(&q).unwrap();
        assert_eq!(p.rows()[0].predicted_label, "a");
        assert_eq!(p.rows()[1].predicted_label, "a");
        assert_eq!(p.rows()[0].score, Some(0.5));
    }

    #[test]
    fn categorical_features_one_hot() {
        let mut m = DataManifest::new(
            DatasetRole::Development,
            vec![ColumnSpec::new("c", ColumnType::Categorical), ColumnSpec::new("y", ColumnType::Categorical)],
            chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        );
        m.label_column = Some("y".into());
        let s = |v: &[&str]| v.iter().map(|x| Some(x.to_string())).collect::<Vec<_>>();
        let d = Dataset::new(
            m,
            vec![
                Column::categorical("c", s(&["p", "p", "q", "q", "p", "q"])),
                Column::categorical("y", s(&["a", "a", "b", "b", "a", "b"])),
            ],
        )
        .unwrap();
        let model = train(Learner::Knn { k: 1 }, &d).unwrap();
        assert_eq!(model.encoder.width(), 2);
        let p = model.predict(&d).unwrap();
        assert!(p.rows().iter().all(|r| r.is_correct() == Some(true)));
    }
}
