//! RBF support vector classification: binary SMO solver, one-against-one
//! voting, grouped cross-validation and Bayesian hyperparameter search.

mod bayes;
mod cv;
mod data;
mod model;
mod smo;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bayes::{bayes_opt, random_search, BayesConfig, BayesResult, Evaluation, SearchBounds};
pub use cv::{assign_folds, cross_validate, cross_validate_report, fit_pipeline, CvReport, FitReport};
pub use data::{LabeledDataset, Sample};
pub use model::{train_model, PairwiseSvm, Prediction, Scaler, TrainedModel, MODEL_FORMAT_VERSION};
pub use smo::{rbf, train_binary, BinaryFit, BinarySvm, KKT_EPS};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub c: f64,
    pub gamma: f64,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.c > 0.0 && self.c.is_finite() && self.gamma > 0.0 && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("hyperparameters C={} gamma={}", self.c, self.gamma)))
        }
    }

    pub fn from_log10(log_c: f64, log_gamma: f64) -> Self {
        Self { c: 10f64.powf(log_c), gamma: 10f64.powf(log_gamma) }
    }

    pub fn log10(&self) -> [f64; 2] {
        [self.c.log10(), self.gamma.log10()]
    }
}

/// Classifier output classes, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SsvepClass {
    #[serde(rename = "LEFT_13")]
    Left13,
    #[serde(rename = "RIGHT_15")]
    Right15,
    #[serde(rename = "BASELINE")]
    Baseline,
}

impl SsvepClass {
    pub const ALL: [SsvepClass; 3] = [SsvepClass::Left13, SsvepClass::Right15, SsvepClass::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            SsvepClass::Left13 => "LEFT_13",
            SsvepClass::Right15 => "RIGHT_15",
            SsvepClass::Baseline => "BASELINE",
        }
    }
}

impl fmt::Display for SsvepClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SsvepClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SsvepClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class `{s}`")))
    }
}
