//! Soft-margin C-SVC dual solved by sequential minimal optimization with
//! second-order working-set selection.

use serde::{Deserialize, Serialize};

use super::Hyperparams;
use crate::error::{Error, Result};

/// Stopping tolerance on the maximal violating pair.
pub const KKT_EPS: f64 = 1e-3;
const TAU: f64 = 1e-12;

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// A trained two-class machine. `f(x) = Σ coef_i K(sv_i, x) + bias`;
/// positive values vote for the positive class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl BinarySvm {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, c)| c * rbf(sv, x, self.gamma)).sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.decision_value(x) > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Solver output with the full dual vector, for diagnostics.
#[derive(Clone, Debug)]
pub struct BinaryFit {
    pub svm: BinarySvm,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub c: f64,
}

impl BinaryFit {
    /// Largest KKT residual over the training set, measured on the margin
    /// `m_i = y_i f(x_i)`: free points need `m = 1`, points at 0 need
    /// `m ≥ 1`, points at C need `m ≤ 1`.
    pub fn kkt_violation(&self, x: &[Vec<f64>], y: &[i8]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let m = f64::from(y[i]) * self.svm.decision_value(&x[i]);
            let a = self.alpha[i];
            let v = if a <= 0.0 {
                (1.0 - m).max(0.0)
            } else if a >= self.c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    /// `Σ α_i y_i`, zero at any feasible point.
    pub fn equality_residual(&self, y: &[i8]) -> f64 {
        self.alpha.iter().zip(y).map(|(a, &yi)| a * f64::from(yi)).sum()
    }
}

/// Train on labels in {+1, −1}.
pub fn train_binary(x: &[Vec<f64>], y: &[i8], hyper: Hyperparams) -> Result<BinaryFit> {
    hyper.validate()?;
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidArgument(format!("{n} rows for {} labels", y.len())));
    }
    if y.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::InvalidArgument("binary labels must be +1 or -1".into()));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    let c = hyper.c;
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&x[i], &x[j], hyper.gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;
    let max_iter = (100 * n).max(10_000_000);
    let mut iter = 0;
    while iter < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut gi = usize::MAX;
        for t in 0..n {
            if y[t] == 1 {
                if !is_upper(alpha[t]) && -g[t] >= gmax {
                    gmax = -g[t];
                    gi = t;
                }
            } else if !is_lower(alpha[t]) && g[t] >= gmax {
                gmax = g[t];
                gi = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut gj = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let (ok, grad_diff, score) = if y[t] == 1 {
                (!is_lower(alpha[t]), gmax + g[t], g[t])
            } else {
                (!is_upper(alpha[t]), gmax - g[t], -g[t])
            };
            if !ok {
                continue;
            }
            gmax2 = gmax2.max(score);
            if grad_diff > 0.0 && gi != usize::MAX {
                let mut quad = k[gi * n + gi] + k[t * n + t] - 2.0 * k[gi * n + t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    gj = t;
                }
            }
        }
        if gmax + gmax2 < KKT_EPS || gi == usize::MAX || gj == usize::MAX {
            break;
        }
        iter += 1;
        let (i, j) = (gi, gj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[i * n + i] + k[j * n + j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[i * n + i] + k[j * n + j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (da_i, da_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += q(i, t) * da_i + q(j, t) * da_j;
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = yf[t] * g[t];
        if is_upper(alpha[t]) {
            if y[t] == -1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] == 1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coef.push(alpha[t] * yf[t]);
        }
    }
    Ok(BinaryFit {
        svm: BinarySvm { support_vectors, dual_coef, bias: -rho, gamma: hyper.gamma },
        alpha,
        iterations: iter,
        c,
    })
}
