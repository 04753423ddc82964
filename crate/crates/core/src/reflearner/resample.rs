use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{train, Learner};
use crate::dataio::{Dataset, PredictionTable, RetrainKind, RetrainPredictionSet, RetrainRun};
use crate::error::{Error, Result};
use crate::exec::{map_range, ExecMode};

/// k-fold retraining over the rows of `d`; instance ids are row indices.
pub fn run_kfold(learner: Learner, d: &Dataset, k: usize, seed: u64, mode: ExecMode) -> Result<RetrainPredictionSet> {
    let n = d.n_rows();
    if k < 2 || k > n {
        return Err(Error::BadFoldCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    let runs = map_range(mode, k, |f| -> Result<RetrainRun> {
        let held: BTreeSet<usize> = folds[f].iter().copied().collect();
        let train_rows: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
        let model = train(learner, &d.select_rows(&train_rows))?;
        let ids: Vec<String> = folds[f].iter().map(|i| i.to_string()).collect();
        Ok(RetrainRun {
            run_id: format!("fold-{f}"),
            held_out_ids: ids.iter().cloned().collect(),
            predictions: model.predict_with_ids(&d.select_rows(&folds[f]), &ids)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    RetrainPredictionSet::new(RetrainKind::KFold, runs, Some((0..n).map(|i| i.to_string()).collect()), None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LooOutcome {
    pub set: RetrainPredictionSet,
    pub full_model: PredictionTable,
}

/// Leave-one-out retraining on at most `cap` seeded leave-out candidates; each
/// retrained model and the full-data model predict the probe rows.
pub fn run_loo(
    learner: Learner,
    d: &Dataset,
    probe: &Dataset,
    cap: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<LooOutcome> {
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, available: n });
    }
    let mut candidates: Vec<usize> = if n > cap {
        sample(&mut ChaCha8Rng::seed_from_u64(seed), n, cap).into_vec()
    } else {
        (0..n).collect()
    };
    candidates.sort_unstable();
    let probe_ids: Vec<String> = (0..probe.n_rows()).map(|i| format!("probe-{i}")).collect();
    let full_model = train(learner, d)?.predict_with_ids(probe, &probe_ids)?;
    let runs = map_range(mode, candidates.len(), |c| -> Result<RetrainRun> {
        let left = candidates[c];
        let rows: Vec<usize> = (0..n).filter(|&i| i != left).collect();
        let model = train(learner, &d.select_rows(&rows))?;
        Ok(RetrainRun {
            run_id: format!("loo-{left}"),
            held_out_ids: [left.to_string()].into(),
            predictions: model.predict_with_ids(probe, &probe_ids)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let universe = candidates.iter().map(|i| i.to_string()).collect();
    let set = RetrainPredictionSet::new(RetrainKind::LeaveOneOut, runs, Some(universe), Some(full_model.clone()))?;
    Ok(LooOutcome { set, full_model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::model::{cv_goodness_variance, goodness_of_fit, loo_stability};
    use crate::reflearner::tests::blobs;

    #[test]
    fn kfold_partition_arithmetic() {
        let d = blobs(100, 6.0, 1);
        let set = run_kfold(Learner::GaussianNb, &d, 5, 7, ExecMode::Parallel).unwrap();
        assert_eq!(set.runs.len(), 5);
        assert!(set.runs.iter().all(|r| r.held_out_ids.len() == 20));
        let all: BTreeSet<&String> = set.runs.iter().flat_map(|r| &r.held_out_ids).collect();
        assert_eq!(all.len(), 100);
        assert!(matches!(
            run_kfold(Learner::GaussianNb, &d, 1, 7, ExecMode::Sequential),
            Err(Error::BadFoldCount { .. })
        ));
    }

    #[test]
    fn kfold_n_is_leave_one_out_shaped() {
        let d = blobs(12, 6.0, 2);
        let set = run_kfold(Learner::Knn { k: 1 }, &d, 12, 7, ExecMode::Sequential).unwrap();
        assert!(set.runs.iter().all(|r| r.held_out_ids.len() == 1));
    }

    #[test]
    fn kfold_separable_blobs() {
        let d = blobs(200, 6.0, 3);
        let a = run_kfold(Learner::GaussianNb, &d, 5, 11, ExecMode::Parallel).unwrap();
        let b = run_kfold(Learner::GaussianNb, &d, 5, 11, ExecMode::Sequential).unwrap();
        assert_eq!(a, b);
        let cv = cv_goodness_variance(&a).unwrap();
        assert!(cv.fold_scores.iter().all(|&s| s >= 0.9), "{:?}", cv.fold_scores);
        for run in &a.runs {
            assert!(goodness_of_fit(&run.predictions).unwrap().accuracy >= 0.9);
        }
    }

    #[test]
    fn loo_runs_and_cap() {
        let d = blobs(80, 6.0, 4);
        let probe = blobs(40, 6.0, 5);
        let out = run_loo(Learner::GaussianNb, &d, &probe, 30, 9, ExecMode::Parallel).unwrap();
        assert_eq!(out.set.runs.len(), 30);
        assert!(out.set.runs.iter().all(|r| r.held_out_ids.len() == 1));
        assert!(loo_stability(&out.set, &out.full_model).unwrap().stability >= 0.9);
    }
}
