//! Selection-channel metrics and summary statistics.

use crate::error::{Error, Result};

/// Classes available to the user: LEFT, RIGHT, GO, STOP.
pub const ITR_CLASSES: usize = 4;
/// Seconds per command execution.
pub const COMMAND_TIME_S: f64 = 4.015;

/// Wolpaw information transfer rate in bits per minute.
pub fn itr(n: usize, p: f64, t: f64) -> Result<f64> {
    if n < 2 || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("itr needs n >= 2 and t > 0; got n={n}, t={t}")));
    }
    let nf = n as f64;
    if !(p >= 1.0 / nf - 1e-12 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("accuracy {p} outside [1/{n}, 1]")));
    }
    let bits =
        if p >= 1.0 { nf.log2() } else { nf.log2() + p * p.log2() + (1.0 - p) * ((1.0 - p) / (nf - 1.0)).log2() };
    Ok((bits * 60.0 / t).max(0.0))
}

/// ITR with below-chance accuracy counted as zero information.
pub fn itr_or_zero(n: usize, p: f64, t: f64) -> f64 {
    if p < 1.0 / n as f64 {
        0.0
    } else {
        itr(n, p, t).unwrap_or(0.0)
    }
}

/// Percentage of successful trials.
pub fn success_rate(successes: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * successes as f64 / total as f64
    }
}

/// Cut to two decimals without rounding, as in the published tables
/// (96.875 → 96.87).
pub fn truncate2(x: f64) -> f64 {
    ((x * 100.0) + 1e-9).floor() / 100.0
}

pub fn fmt2(x: f64) -> String {
    format!("{:.2}", truncate2(x))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
