use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bayes::{bayes_opt, BayesConfig, Evaluation};
use super::model::{train_model, Scaler, TrainedModel};
use super::{Hyperparams, LabeledDataset, SsvepClass};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Fold index per sample. All windows of one (class, subject, trial) group
/// share a fold; groups of each class are shuffled with `seed` and dealt
/// round-robin, continuing the deal across classes.
pub fn assign_folds(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("{k} folds")));
    }
    let mut groups: BTreeMap<SsvepClass, BTreeMap<(&str, u32), usize>> = BTreeMap::new();
    for s in data.samples() {
        groups.entry(s.label).or_default().insert((s.subject.as_str(), s.trial), 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0;
    for by_trial in groups.values_mut() {
        let mut keys: Vec<(&str, u32)> = by_trial.keys().copied().collect();
        keys.shuffle(&mut rng);
        for key in keys {
            by_trial.insert(key, next % k);
            next += 1;
        }
    }
    Ok(data.samples().iter().map(|s| groups[&s.label][&(s.subject.as_str(), s.trial)]).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub hyper: Hyperparams,
    pub fold_accuracy: Vec<f64>,
    pub fold_sizes: Vec<usize>,
    /// Scaler fitted on each fold's training portion.
    pub scalers: Vec<Scaler>,
    pub mean_accuracy: f64,
}

/// Check every training split keeps all classes and every test fold is
/// non-empty.
fn check_folds(data: &LabeledDataset, folds: &[usize], k: usize) -> Result<()> {
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    for f in 0..k {
        if !folds.contains(&f) {
            return Err(Error::InvalidDataset(format!("fold {f} is empty")));
        }
        for &c in &classes {
            let in_train = data.samples().iter().zip(folds).any(|(s, &g)| g != f && s.label == c);
            if !in_train {
                return Err(Error::ClassAbsentFromFold(c.to_string()));
            }
        }
    }
    Ok(())
}

pub fn cross_validate_report(
    data: &LabeledDataset,
    hyper: Hyperparams,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<CvReport> {
    hyper.validate()?;
    let folds = assign_folds(data, k, seed)?;
    check_folds(data, &folds, k)?;
    let results = exec.map_range(k, |f| -> Result<(f64, usize, Scaler)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (s, &g) in data.samples().iter().zip(&folds) {
            if g != f {
                xs.push(s.features.as_slice());
                ys.push(s.label);
            }
        }
        let model = train_model(&xs, &ys, hyper)?;
        let mut correct = 0;
        let mut total = 0;
        for (s, &g) in data.samples().iter().zip(&folds) {
            if g == f {
                total += 1;
                if model.predict(&s.features)?.class == s.label {
                    correct += 1;
                }
            }
        }
        Ok((correct as f64 / total as f64, total, model.scaler))
    });
    let mut report = CvReport { hyper, fold_accuracy: vec![], fold_sizes: vec![], scalers: vec![], mean_accuracy: 0.0 };
    for r in results {
        let (acc, n, sc) = r?;
        report.fold_accuracy.push(acc);
        report.fold_sizes.push(n);
        report.scalers.push(sc);
    }
    report.mean_accuracy = report.fold_accuracy.iter().sum::<f64>() / k as f64;
    Ok(report)
}

/// Mean held-out accuracy over `k` grouped, stratified folds.
pub fn cross_validate(data: &LabeledDataset, hyper: Hyperparams, k: usize, seed: u64) -> Result<f64> {
    Ok(cross_validate_report(data, hyper, k, seed, Execution::default())?.mean_accuracy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub hyper: Hyperparams,
    pub cv_accuracy: f64,
    pub evaluations: Vec<Evaluation>,
}

/// Bayesian search over 5-fold cross-validated accuracy, then a final fit
/// on all rows at the incumbent.
pub fn fit_pipeline(
    data: &LabeledDataset,
    seed: u64,
    config: &BayesConfig,
    exec: Execution,
) -> Result<(TrainedModel, FitReport)> {
    const FOLDS: usize = 5;
    data.require_all_classes()?;
    check_folds(data, &assign_folds(data, FOLDS, seed)?, FOLDS)?;
    let result = bayes_opt(
        |h| cross_validate_report(data, h, FOLDS, seed, exec).map_or(f64::NAN, |r| r.mean_accuracy),
        config,
        seed,
    )?;
    let xs: Vec<&[f64]> = data.samples().iter().map(|s| s.features.as_slice()).collect();
    let ys: Vec<SsvepClass> = data.samples().iter().map(|s| s.label).collect();
    let model = train_model(&xs, &ys, result.best)?;
    Ok((model, FitReport { hyper: result.best, cv_accuracy: result.best_value, evaluations: result.evaluations }))
}
