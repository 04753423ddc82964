//! Model-view attributes over prediction tables, retrain sets and model descriptors.

use std::collections::{BTreeMap, BTreeSet};

use super::{max_rate_gap, ratio_or_zero, Finding, Measurement};
use crate::dataio::{Dataset, ModelDescriptor, PredictionRow, PredictionTable, RetrainKind, RetrainPredictionSet};
use crate::error::{Error, Result};
use crate::qmodel::TailoringProfile;
use crate::stats;

/// Counts indexed `[true][predicted]` over the sorted union of observed classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)> + Clone) -> Self {
        let classes: BTreeSet<&str> = pairs.clone().into_iter().flat_map(|(t, p)| [t, p]).collect();
        let classes: Vec<String> = classes.into_iter().map(str::to_string).collect();
        let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
        for (t, p) in pairs {
            counts[index[t]][index[p]] += 1;
        }
        ConfusionMatrix { classes, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessOfFit {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class: BTreeMap<String, ClassScores>,
    pub macro_avg: ClassScores,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub notices: Vec<Finding>,
}

fn labeled_pairs<'a>(rows: &[&'a PredictionRow]) -> Vec<(&'a str, &'a str)> {
    rows.iter()
        .filter_map(|r| r.true_label.as_deref().map(|t| (t, r.predicted_label.as_str())))
        .collect()
}

/// Classification scores on the labeled rows of a prediction table.
pub fn goodness_of_fit(p: &PredictionTable) -> Result<GoodnessOfFit> {
    let rows: Vec<&PredictionRow> = p.rows().iter().collect();
    goodness_of_rows(&rows)
}

fn goodness_of_rows(rows: &[&PredictionRow]) -> Result<GoodnessOfFit> {
    let pairs = labeled_pairs(rows);
    if pairs.is_empty() {
        return Err(Error::NoLabeledRows);
    }
    let cm = ConfusionMatrix::from_pairs(pairs.iter().copied());
    let mut notices = Vec::new();
    let mut per_class = BTreeMap::new();
    for (i, class) in cm.classes.iter().enumerate() {
        let tp = cm.counts[i][i] as usize;
        let precision = ratio_or_zero(tp, cm.col_sum(i) as usize, &format!("precision of \"{class}\""), &mut notices);
        let recall = ratio_or_zero(tp, cm.row_sum(i) as usize, &format!("recall of \"{class}\""), &mut notices);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.insert(class.clone(), ClassScores { precision, recall, f1 });
    }
    let k = per_class.len() as f64;
    let avg = |f: fn(&ClassScores) -> f64| per_class.values().map(f).sum::<f64>() / k;
    let macro_avg = ClassScores {
        precision: avg(|s| s.precision),
        recall: avg(|s| s.recall),
        f1: avg(|s| s.f1),
    };
    Ok(GoodnessOfFit {
        accuracy: cm.trace() as f64 / cm.total() as f64,
        n_labeled: pairs.len(),
        n_unlabeled: rows.len() - pairs.len(),
        confusion: cm,
        per_class,
        macro_avg,
        notices,
    })
}

impl From<GoodnessOfFit> for Measurement {
    fn from(g: GoodnessOfFit) -> Self {
        let mut m = Measurement::default()
            .with("accuracy", g.accuracy)
            .with("macro_precision", g.macro_avg.precision)
            .with("macro_recall", g.macro_avg.recall)
            .with("macro_f1", g.macro_avg.f1)
            .with("n_labeled", g.n_labeled)
            .with("n_unlabeled", g.n_unlabeled);
        for (class, s) in &g.per_class {
            m.findings.push(
                Finding::note(format!(
                    "class \"{class}\": precision {}, recall {}, F1",
                    crate::canonical::format_g10(s.precision),
                    crate::canonical::format_g10(s.recall)
                ))
                .value(s.f1),
            );
        }
        m.findings.extend(g.notices);
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvVariance {
    pub fold_scores: Vec<f64>,
    pub variance: f64,
    pub std: f64,
}

/// Sample variance of per-fold held-out accuracy.
pub fn cv_goodness_variance(r: &RetrainPredictionSet) -> Result<CvVariance> {
    if r.kind != RetrainKind::KFold {
        return Err(Error::NotKFold);
    }
    if r.runs.len() < 2 {
        return Err(Error::TooFewFolds(r.runs.len()));
    }
    let mut fold_scores = Vec::with_capacity(r.runs.len());
    for run in &r.runs {
        let rows = run
            .held_out_ids
            .iter()
            .map(|id| {
                run.predictions
                    .get(id)
                    .ok_or_else(|| Error::IdMismatch(format!("run \"{}\" has no prediction for \"{id}\"", run.run_id)))
            })
            .collect::<Result<Vec<_>>>()?;
        fold_scores.push(goodness_of_rows(&rows)?.accuracy);
    }
    let variance = stats::sample_variance(&fold_scores);
    Ok(CvVariance {
        std: variance.sqrt(),
        variance,
        fold_scores,
    })
}

impl From<CvVariance> for Measurement {
    fn from(c: CvVariance) -> Self {
        Measurement::default()
            .with("variance", c.variance)
            .with("std", c.std)
            .with("fold_scores", super::MetricValue::Numbers(c.fold_scores))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robustness {
    pub clean_accuracy: f64,
    /// (noise level, accuracy under noise, ELA) in input order.
    pub levels: Vec<(f64, f64, f64)>,
    pub ela_max: f64,
}

/// Equalized loss of accuracy: `(1 − A_x) / A0` for every noise level `x`.
pub fn robustness_ela(clean: &PredictionTable, noisy: &[(f64, PredictionTable)]) -> Result<Robustness> {
    let a0 = goodness_of_fit(clean)?.accuracy;
    if a0 == 0.0 {
        return Err(Error::ZeroCleanAccuracy);
    }
    let ids: BTreeSet<&str> = clean.ids().collect();
    let mut levels = Vec::with_capacity(noisy.len());
    for (level, table) in noisy {
        let other: BTreeSet<&str> = table.ids().collect();
        if other != ids {
            return Err(Error::IdMismatch(format!(
                "predictions at noise level {level} cover different instances"
            )));
        }
        let ax = goodness_of_fit(table)?.accuracy;
        levels.push((*level, ax, (1.0 - ax) / a0));
    }
    let ela_max = levels.iter().map(|l| l.2).fold(0.0, f64::max);
    Ok(Robustness {
        clean_accuracy: a0,
        levels,
        ela_max,
    })
}

impl From<Robustness> for Measurement {
    fn from(r: Robustness) -> Self {
        let mut m = Measurement::default()
            .with("ela_max", r.ela_max)
            .with("clean_accuracy", r.clean_accuracy)
            .with("noise_levels", super::MetricValue::Numbers(r.levels.iter().map(|l| l.0).collect()))
            .with("ela", super::MetricValue::Numbers(r.levels.iter().map(|l| l.2).collect()));
        m.findings.extend(r.levels.iter().map(|(x, ax, _)| {
            Finding::note(format!("accuracy at noise level {}", crate::canonical::format_g10(*x))).value(*ax)
        }));
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LooStability {
    pub stability: f64,
    pub per_run_disagreement: Vec<f64>,
}

/// One minus the mean rate at which leave-one-out retrains disagree with the
/// full-data model on the probe instances.
pub fn loo_stability(r: &RetrainPredictionSet, probe: &PredictionTable) -> Result<LooStability> {
    if r.kind != RetrainKind::LeaveOneOut {
        return Err(Error::NotLeaveOneOut);
    }
    if r.runs.is_empty() {
        return Err(Error::EmptyInput("no leave-one-out runs".into()));
    }
    if probe.is_empty() {
        return Err(Error::EmptyInput("empty probe set".into()));
    }
    let mut per_run = Vec::with_capacity(r.runs.len());
    for run in &r.runs {
        let mut differ = 0usize;
        for full in probe.rows() {
            let other = run.predictions.get(&full.instance_id).ok_or_else(|| {
                Error::IdMismatch(format!("run \"{}\" lacks probe \"{}\"", run.run_id, full.instance_id))
            })?;
            if other.predicted_label != full.predicted_label {
                differ += 1;
            }
        }
        per_run.push(differ as f64 / probe.len() as f64);
    }
    Ok(LooStability {
        stability: 1.0 - stats::mean(&per_run),
        per_run_disagreement: per_run,
    })
}

impl From<LooStability> for Measurement {
    fn from(s: LooStability) -> Self {
        let worst = s.per_run_disagreement.iter().copied().fold(0.0, f64::max);
        Measurement::default()
            .with("stability", s.stability)
            .with("runs", s.per_run_disagreement.len())
            .with("max_run_disagreement", worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRates {
    pub tp: u64,
    pub positives: u64,
    pub fp: u64,
    pub negatives: u64,
}

impl GroupRates {
    pub fn tpr(&self) -> f64 {
        self.tp as f64 / self.positives as f64
    }

    pub fn fpr(&self) -> f64 {
        self.fp as f64 / self.negatives as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedOdds {
    pub tpr_gap: f64,
    pub fpr_gap: f64,
    pub eo_gap: f64,
    pub per_group: BTreeMap<String, GroupRates>,
    pub notices: Vec<Finding>,
}

/// Largest between-group differences in true- and false-positive rate.
pub fn fairness_equalized_odds(p: &PredictionTable, positive_class: &str) -> Result<EqualizedOdds> {
    if !p.has_groups() {
        return Err(Error::MissingColumn("group"));
    }
    let classes: BTreeSet<&str> = p
        .labeled()
        .flat_map(|r| [r.true_label.as_deref().unwrap_or_default(), r.predicted_label.as_str()])
        .collect();
    if classes.is_empty() {
        return Err(Error::NoLabeledRows);
    }
    if classes.len() > 2 {
        return Err(Error::NonBinaryLabel(format!("{} classes observed", classes.len())));
    }
    let mut groups: BTreeMap<String, GroupRates> = BTreeMap::new();
    for r in p.labeled() {
        let Some(g) = &r.group else { continue };
        let e = groups.entry(g.clone()).or_insert(GroupRates {
            tp: 0,
            positives: 0,
            fp: 0,
            negatives: 0,
        });
        let predicted_pos = r.predicted_label == positive_class;
        if r.true_label.as_deref() == Some(positive_class) {
            e.positives += 1;
            e.tp += predicted_pos as u64;
        } else {
            e.negatives += 1;
            e.fp += predicted_pos as u64;
        }
    }
    let mut notices = Vec::new();
    groups.retain(|g, r| {
        let ok = r.positives > 0 && r.negatives > 0;
        if !ok {
            notices.push(Finding::note(format!("group \"{g}\" excluded: lacks positive or negative instances")));
        }
        ok
    });
    if groups.len() < 2 {
        return Err(Error::NoEligibleGroups);
    }
    let tprs: Vec<(u64, u64)> = groups.values().map(|r| (r.tp, r.positives)).collect();
    let fprs: Vec<(u64, u64)> = groups.values().map(|r| (r.fp, r.negatives)).collect();
    let (tpr_gap, fpr_gap) = (max_rate_gap(&tprs), max_rate_gap(&fprs));
    Ok(EqualizedOdds {
        tpr_gap,
        fpr_gap,
        eo_gap: tpr_gap.max(fpr_gap),
        per_group: groups,
        notices,
    })
}

impl From<EqualizedOdds> for Measurement {
    fn from(e: EqualizedOdds) -> Self {
        let mut m = Measurement::default()
            .with("eo_gap", e.eo_gap)
            .with("tpr_gap", e.tpr_gap)
            .with("fpr_gap", e.fpr_gap);
        for (g, r) in &e.per_group {
            m.findings.push(
                Finding::note(format!(
                    "group \"{g}\": TPR {}, FPR {}",
                    crate::canonical::format_g10(r.tpr()),
                    crate::canonical::format_g10(r.fpr())
                )),
            );
        }
        m.findings.extend(e.notices);
        m
    }
}

/// Complexity figures reported by the model descriptor.
pub fn interpretability_complexity(m: &ModelDescriptor) -> Measurement {
    Measurement::default()
        .with("n_parameters", m.n_parameters as u64)
        .with("depth", m.depth.map(|d| d as u64))
}

pub fn resource_utilization(m: &ModelDescriptor) -> Measurement {
    Measurement::default().with("storage_bytes", m.storage_bytes as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Appropriateness {
    pub compatible: bool,
    pub task_matches: bool,
    pub column_types_supported: bool,
    pub reasons: Vec<String>,
}

/// Whether the model type fits the task and every feature column type of the data.
pub fn model_type_appropriateness(m: &ModelDescriptor, d: &Dataset, profile: &TailoringProfile) -> Appropriateness {
    let mut reasons = Vec::new();
    let task_matches = m.task == profile.task;
    if !task_matches {
        reasons.push("task mismatch".to_string());
    }
    let mut column_types_supported = true;
    for c in d.columns() {
        if d.manifest().is_role_column(&c.name) {
            continue;
        }
        if !m.supported_column_types.contains(&c.ty()) {
            column_types_supported = false;
            reasons.push(format!("column '{}': {:?} unsupported", c.name, c.ty()));
        }
    }
    Appropriateness {
        compatible: task_matches && column_types_supported,
        task_matches,
        column_types_supported,
        reasons,
    }
}

impl From<Appropriateness> for Measurement {
    fn from(a: Appropriateness) -> Self {
        let mut m = Measurement::default()
            .with("compatible", a.compatible)
            .with("task_matches", a.task_matches)
            .with("column_types_supported", a.column_types_supported);
        m.findings.extend(a.reasons.into_iter().map(Finding::note));
        m
    }
}
