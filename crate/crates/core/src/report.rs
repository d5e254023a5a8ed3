//! Cohort summary in table, CSV and JSON form.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::experiment::SubjectResult;
use crate::metrics::{fmt2, mean, sample_sd, COMMAND_TIME_S, ITR_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cv_accuracy: f64,
    pub test_accuracy: f64,
    pub success_rate: f64,
    pub itr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub rows: Vec<SubjectResult>,
    pub average: Aggregate,
    /// Sample standard deviation across subjects.
    pub std_dev: Aggregate,
    pub notes: Vec<String>,
}

fn column(rows: &[SubjectResult], f: impl Fn(&SubjectResult) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

impl ExperimentReport {
    pub fn new(seed: u64, rows: Vec<SubjectResult>) -> Self {
        let agg = |stat: fn(&[f64]) -> f64| Aggregate {
            cv_accuracy: stat(&column(&rows, |r| r.cv_accuracy)),
            test_accuracy: stat(&column(&rows, |r| r.test_accuracy)),
            success_rate: stat(&column(&rows, |r| r.success_rate)),
            itr: stat(&column(&rows, |r| r.itr)),
        };
        let average = agg(mean);
        let std_dev = agg(sample_sd);
        let notes = vec![
            format!(
                "ITR uses n = {ITR_CLASSES} selectable commands (LEFT, RIGHT, GO, STOP) and t = {COMMAND_TIME_S} s per command; \
                 its ceiling is therefore {:.3} bits/min.",
                crate::metrics::itr(ITR_CLASSES, 1.0, COMMAND_TIME_S).unwrap_or(0.0)
            ),
            "ITR values above this ceiling are not attainable with these n and t."
                .to_string(),
            "Rates are truncated, not rounded, to two decimals.".to_string(),
            "Test accuracy is window-level accuracy on a held-out session of 5 × 15 s trials per class.".to_string(),
        ];
        Self { seed, rows, average, std_dev, notes }
    }

    /// Accuracy table followed by the online-test table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Accuracy (seed {})", self.seed);
        let _ = writeln!(s, "{:<8} {:>9} {:>10} {:>9} {:>9}", "Subject", "SNR (dB)", "CV (%)", "Test (%)", "C / gamma");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<8} {:>9.1} {:>10} {:>9} {:>9}",
                r.id,
                20.0 * (r.ssvep_amp / r.noise_amp).log10(),
                fmt2(r.cv_accuracy),
                fmt2(r.test_accuracy),
                format!("{:.2e}/{:.2e}", r.hyper.c, r.hyper.gamma)
            );
        }
        let _ = writeln!(
            s,
            "{:<8} {:>9} {:>10} {:>9}",
            "Average",
            "",
            fmt2(self.average.cv_accuracy),
            fmt2(self.average.test_accuracy)
        );
        let _ = writeln!(
            s,
            "{:<8} {:>9} {:>10} {:>9}",
            "SD",
            "",
            fmt2(self.std_dev.cv_accuracy),
            fmt2(self.std_dev.test_accuracy)
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "Online test");
        let _ = writeln!(
            s,
            "{:<8} {:>5} {:>5} {:>5} {:>5} {:>6} {:>6} {:>9} {:>10}",
            "Subject", "L int", "L act", "R int", "R act", "GS int", "GS act", "Succ (%)", "ITR (b/m)"
        );
        for r in &self.rows {
            let c = &r.counts;
            let _ = writeln!(
                s,
                "{:<8} {:>5} {:>5} {:>5} {:>5} {:>6} {:>6} {:>9} {:>10}",
                r.id,
                c.intended_l,
                c.actual_l,
                c.intended_r,
                c.actual_r,
                c.intended_gs,
                c.actual_gs,
                fmt2(r.success_rate),
                fmt2(r.itr)
            );
        }
        let _ = writeln!(
            s,
            "{:<8} {:>40} {:>9} {:>10}",
            "Average",
            "",
            fmt2(self.average.success_rate),
            fmt2(self.average.itr)
        );
        let _ =
            writeln!(s, "{:<8} {:>40} {:>9} {:>10}", "SD", "", fmt2(self.std_dev.success_rate), fmt2(self.std_dev.itr));
        let _ = writeln!(s);
        for n in &self.notes {
            let _ = writeln!(s, "* {n}");
        }
        s
    }

    /// One row per subject plus `AVG` and `SD` rows; full precision.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "subject,ssvep_amp_uv,noise_amp_uv,c,gamma,cv_accuracy,test_accuracy,intended_l,actual_l,intended_r,actual_r,intended_gs,actual_gs,success_rate,itr\n",
        );
        for r in &self.rows {
            let c = &r.counts;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.id,
                r.ssvep_amp,
                r.noise_amp,
                r.hyper.c,
                r.hyper.gamma,
                r.cv_accuracy,
                r.test_accuracy,
                c.intended_l,
                c.actual_l,
                c.intended_r,
                c.actual_r,
                c.intended_gs,
                c.actual_gs,
                r.success_rate,
                r.itr
            );
        }
        for (name, a) in [("AVG", &self.average), ("SD", &self.std_dev)] {
            let _ = writeln!(s, "{name},,,,,{},{},,,,,,,{},{}", a.cv_accuracy, a.test_accuracy, a.success_rate, a.itr);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
