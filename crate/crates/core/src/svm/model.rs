//! One-against-one multiclass model with feature standardization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::smo::{train_binary, BinarySvm};
use super::{Hyperparams, SsvepClass};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-feature standardization. Constant features get unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::InvalidDataset("no rows to fit a scaler".into()))?;
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut std {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSvm {
    /// Index into `TrainedModel::classes` voted for when `f(x) > 0`.
    pub positive: usize,
    /// Index voted for otherwise.
    pub negative: usize,
    pub svm: BinarySvm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub classes: Vec<SsvepClass>,
    pub hyper: Hyperparams,
    pub scaler: Scaler,
    pub pairwise: Vec<PairwiseSvm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: SsvepClass,
    /// Votes per entry of `TrainedModel::classes`.
    pub votes: Vec<u32>,
    /// One value per pairwise classifier, in model order.
    pub decision_values: Vec<f64>,
}

/// Train a one-against-one model. Labels present in `y` define the classes,
/// in canonical class order.
pub fn train_model(x: &[&[f64]], y: &[SsvepClass], hyper: Hyperparams) -> Result<TrainedModel> {
    hyper.validate()?;
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("{} rows for {} labels", x.len(), y.len())));
    }
    let mut classes: Vec<SsvepClass> = y.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let scaler = Scaler::fit(x)?;
    let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
    let mut pairwise = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (row, &label) in z.iter().zip(y) {
                if label == classes[a] {
                    xs.push(row.clone());
                    ys.push(1i8);
                } else if label == classes[b] {
                    xs.push(row.clone());
                    ys.push(-1i8);
                }
            }
            let fit = train_binary(&xs, &ys, hyper)?;
            pairwise.push(PairwiseSvm { positive: a, negative: b, svm: fit.svm });
        }
    }
    Ok(TrainedModel { format_version: MODEL_FORMAT_VERSION, classes, hyper, scaler, pairwise })
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    /// Vote over all pairs. Ties go to the class with the largest summed
    /// |decision value| over the votes it won, then to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::WrongDimension { got: x.len(), expected: self.dim() });
        }
        let z = self.scaler.transform(x);
        let k = self.classes.len();
        let mut votes = vec![0u32; k];
        let mut strength = vec![0.0; k];
        let mut decision_values = Vec::with_capacity(self.pairwise.len());
        for p in &self.pairwise {
            let f = p.svm.decision_value(&z);
            let winner = if f > 0.0 { p.positive } else { p.negative };
            votes[winner] += 1;
            strength[winner] += f.abs();
            decision_values.push(f);
        }
        let mut best = 0;
        for c in 1..k {
            if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
                best = c;
            }
        }
        Ok(Prediction { class: self.classes[best], votes, decision_values })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported format version {}", m.format_version)));
        }
        let k = m.classes.len();
        if k < 2 {
            return Err(Error::ModelFormat(format!("{k} classes")));
        }
        if m.pairwise.len() != k * (k - 1) / 2 {
            return Err(Error::ModelFormat(format!("{} pairwise classifiers for {k} classes", m.pairwise.len())));
        }
        if m.scaler.mean.len() != m.scaler.std.len() {
            return Err(Error::ModelFormat("scaler mean/std lengths differ".into()));
        }
        for p in &m.pairwise {
            if p.positive >= k || p.negative >= k || p.svm.support_vectors.len() != p.svm.dual_coef.len() {
                return Err(Error::ModelFormat("malformed pairwise classifier".into()));
            }
            if p.svm.support_vectors.iter().any(|sv| sv.len() != m.scaler.dim()) {
                return Err(Error::ModelFormat("support vector dimension mismatch".into()));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
