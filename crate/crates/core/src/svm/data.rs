use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SsvepClass;
use crate::error::{Error, Result};

/// One feature window. Trial ids are numbered per subject and class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: SsvepClass,
    pub subject: String,
    pub trial: u32,
    pub window: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    samples: Vec<Sample>,
}

impl LabeledDataset {
    /// Rejects ragged or non-finite rows and duplicate
    /// (subject, class, trial, window) keys.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let d = first.features.len();
            if d == 0 {
                return Err(Error::InvalidDataset("zero-dimensional features".into()));
            }
            if samples.iter().any(|s| s.features.len() != d) {
                return Err(Error::InvalidDataset("rows of unequal dimension".into()));
            }
        }
        if samples.iter().flat_map(|s| &s.features).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut keys = HashSet::new();
        for s in &samples {
            if !keys.insert((s.subject.as_str(), s.label, s.trial, s.window)) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate window: subject {} {} trial {} window {}",
                    s.subject, s.label, s.trial, s.window
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    /// Classes present, in canonical order.
    pub fn classes(&self) -> Vec<SsvepClass> {
        let mut c: Vec<SsvepClass> = self.samples.iter().map(|s| s.label).collect();
        c.sort();
        c.dedup();
        c
    }

    pub fn require_all_classes(&self) -> Result<()> {
        for c in SsvepClass::ALL {
            if !self.samples.iter().any(|s| s.label == c) {
                return Err(Error::InvalidDataset(format!("class {c} has no samples")));
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: LabeledDataset) -> Result<()> {
        let mut all = std::mem::take(&mut self.samples);
        all.extend(other.samples);
        *self = Self::new(all)?;
        Ok(())
    }

    /// Same rows with labels permuted by `perm` (a permutation of row indices).
    /// Fails on duplicate keys unless trial ids are unique across classes.
    pub fn with_labels_from(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        let samples =
            self.samples.iter().zip(perm).map(|(s, &p)| Sample { label: self.samples[p].label, ..s.clone() }).collect();
        Self::new(samples)
    }

    /// Header `subject,class,trial,window,f0..`, one row per window.
    pub fn write_csv<W: Write>(&self, mut out: W, feature_names: &[String]) -> Result<()> {
        write!(out, "subject,class,trial,window")?;
        for n in feature_names {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
        for s in &self.samples {
            write!(out, "{},{},{},{}", s.subject, s.label, s.trial, s.window)?;
            for v in &s.features {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        lines.next().ok_or_else(|| Error::InvalidDataset("empty CSV".into()))?;
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = |what: &str| Error::InvalidDataset(format!("row {}: {what}", i + 1));
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() < 5 {
                return Err(bad("too few columns"));
            }
            let features = cols[4..]
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| bad("bad feature value")))
                .collect::<Result<Vec<_>>>()?;
            samples.push(Sample {
                subject: cols[0].to_string(),
                label: cols[1].parse()?,
                trial: cols[2].parse().map_err(|_| bad("bad trial id"))?,
                window: cols[3].parse().map_err(|_| bad("bad window id"))?,
                features,
            });
        }
        Self::new(samples)
    }
}
