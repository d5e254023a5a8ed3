//! Gaussian-process Bayesian optimization over `(log10 C, log10 γ)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::Hyperparams;
use crate::error::{Error, Result};

/// Box in log10 space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self { lo: [-3.0, -3.0], hi: [3.0, 3.0] }
    }
}

impl SearchBounds {
    fn to_log(&self, u: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|d| self.lo[d] + u[d] * (self.hi[d] - self.lo[d]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesConfig {
    pub bounds: SearchBounds,
    pub budget: usize,
    pub initial: usize,
    pub random_candidates: usize,
    pub local_candidates: usize,
    /// Exploration margin of expected improvement, in standardized units.
    pub xi: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            bounds: SearchBounds::default(),
            budget: 30,
            initial: 5,
            random_candidates: 1000,
            local_candidates: 200,
            xi: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub log10: [f64; 2],
    pub hyper: Hyperparams,
    /// `None` when the objective returned a non-finite value.
    pub value: Option<f64>,
    /// Best finite value seen up to and including this evaluation.
    pub incumbent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesResult {
    pub best: Hyperparams,
    pub best_log10: [f64; 2],
    pub best_value: f64,
    pub evaluations: Vec<Evaluation>,
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Zero-mean GP on standardized targets with a unit-variance
/// squared-exponential kernel.
struct Gp {
    x: Vec<[f64; 2]>,
    length: f64,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
}

const LENGTH_GRID: [f64; 7] = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2];
const NOISE_GRID: [f64; 4] = [1e-6, 1e-4, 1e-2, 1e-1];

impl Gp {
    /// Kernel width and noise picked from a grid by marginal likelihood.
    fn fit(x: &[[f64; 2]], y: &[f64]) -> Self {
        let n = x.len();
        let yv = DVector::from_column_slice(y);
        let mut best: Option<(f64, Gp)> = None;
        for &length in &LENGTH_GRID {
            for &noise in &NOISE_GRID {
                let k = DMatrix::from_fn(n, n, |i, j| {
                    let v = (-sq_dist(&x[i], &x[j]) / (2.0 * length * length)).exp();
                    if i == j {
                        v + noise + 1e-10
                    } else {
                        v
                    }
                });
                let Some(ch) = k.cholesky() else { continue };
                let alpha = ch.solve(&yv);
                let l = ch.l();
                let lml = -0.5 * yv.dot(&alpha) - l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                    best = Some((lml, Gp { x: x.to_vec(), length, chol: l, alpha }));
                }
            }
        }
        best.expect("noise jitter keeps the kernel positive definite").1
    }

    fn predict(&self, u: &[f64; 2]) -> (f64, f64) {
        let ks = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| (-sq_dist(xi, u) / (2.0 * self.length * self.length)).exp()),
        );
        let mean = ks.dot(&self.alpha);
        let v = self.chol.solve_lower_triangular(&ks).expect("triangular factor is invertible");
        let var = (1.0 - v.dot(&v)).max(1e-12);
        (mean, var.sqrt())
    }
}

fn expected_improvement(mean: f64, sd: f64, best: f64, xi: f64, normal: &Normal) -> f64 {
    let imp = mean - best - xi;
    let z = imp / sd;
    imp * normal.cdf(z) + sd * normal.pdf(z)
}

fn latin_hypercube(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut cols = [(0..n).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>()];
    for c in &mut cols {
        c.shuffle(rng);
    }
    (0..n).map(|i| [0, 1].map(|d| (cols[d][i] as f64 + rng.random::<f64>()) / n as f64)).collect()
}

struct Tracker<F> {
    objective: F,
    bounds: SearchBounds,
    evaluations: Vec<Evaluation>,
    unit: Vec<[f64; 2]>,
    best: Option<(usize, f64)>,
}

impl<F: FnMut(Hyperparams) -> f64> Tracker<F> {
    fn eval(&mut self, u: [f64; 2]) {
        let log10 = self.bounds.to_log(u);
        let hyper = Hyperparams::from_log10(log10[0], log10[1]);
        let raw = (self.objective)(hyper);
        let value = raw.is_finite().then_some(raw);
        if let Some(v) = value {
            if self.best.is_none_or(|(_, b)| v > b) {
                self.best = Some((self.evaluations.len(), v));
            }
        }
        let incumbent = self.best.map_or(f64::NEG_INFINITY, |(_, b)| b);
        self.evaluations.push(Evaluation { log10, hyper, value, incumbent });
        self.unit.push(u);
    }

    /// Observed values with non-finite entries replaced by the worst finite
    /// one, standardized.
    fn targets(&self) -> Vec<f64> {
        let finite: Vec<f64> = self.evaluations.iter().filter_map(|e| e.value).collect();
        let worst = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = if worst.is_finite() { worst } else { 0.0 };
        let y: Vec<f64> = self.evaluations.iter().map(|e| e.value.unwrap_or(worst)).collect();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let sd = if sd > 1e-12 { sd } else { 1.0 };
        y.iter().map(|v| (v - mean) / sd).collect()
    }

    fn finish(self) -> Result<BayesResult> {
        let (idx, best_value) = self.best.ok_or(Error::NonFinite)?;
        let e = &self.evaluations[idx];
        Ok(BayesResult { best: e.hyper, best_log10: e.log10, best_value, evaluations: self.evaluations })
    }
}

/// Maximize `objective`. Deterministic for a given seed.
pub fn bayes_opt<F: FnMut(Hyperparams) -> f64>(objective: F, config: &BayesConfig, seed: u64) -> Result<BayesResult> {
    if config.budget < config.initial || config.initial < 5 {
        return Err(Error::InvalidArgument(format!(
            "budget {} with {} initial points; both must be at least 5",
            config.budget, config.initial
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::standard();
    let mut tr = Tracker { objective, bounds: config.bounds, evaluations: vec![], unit: vec![], best: None };
    for u in latin_hypercube(config.initial, &mut rng) {
        tr.eval(u);
    }
    while tr.evaluations.len() < config.budget {
        let y = tr.targets();
        let gp = Gp::fit(&tr.unit, &y);
        let best_y = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let anchor = tr.best.map_or(tr.unit[0], |(i, _)| tr.unit[i]);
        let mut cands: Vec<[f64; 2]> =
            (0..config.random_candidates).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        for _ in 0..config.local_candidates {
            cands.push([0, 1].map(|d| {
                let z: f64 = rng.sample(StandardNormal);
                (anchor[d] + 0.05 * z).clamp(0.0, 1.0)
            }));
        }
        let mut pick = cands[0];
        let mut pick_ei = f64::NEG_INFINITY;
        for c in cands {
            let (m, s) = gp.predict(&c);
            let ei = expected_improvement(m, s, best_y, config.xi, &normal);
            if ei > pick_ei {
                pick_ei = ei;
                pick = c;
            }
        }
        tr.eval(pick);
    }
    tr.finish()
}

/// Uniform random search with the same budget, as a baseline.
pub fn random_search<F: FnMut(Hyperparams) -> f64>(
    objective: F,
    config: &BayesConfig,
    seed: u64,
) -> Result<BayesResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = Tracker { objective, bounds: config.bounds, evaluations: vec![], unit: vec![], best: None };
    for _ in 0..config.budget {
        tr.eval([rng.random::<f64>(), rng.random::<f64>()]);
    }
    tr.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(h: Hyperparams) -> f64 {
        let [a, b] = h.log10();
        -((a - 1.0).powi(2) + (b + 1.0).powi(2))
    }

    #[test]
    fn finds_bowl_centre() {
        let r = bayes_opt(bowl, &BayesConfig::default(), 1).unwrap();
        assert_eq!(r.evaluations.len(), 30);
        let [a, b] = r.best_log10;
        assert!((a - 1.0).abs() < 0.3 && (b + 1.0).abs() < 0.3, "{a} {b}");
    }

    #[test]
    fn incumbent_never_decreases() {
        let r = bayes_opt(bowl, &BayesConfig::default(), 4).unwrap();
        for w in r.evaluations.windows(2) {
            assert!(w[1].incumbent >= w[0].incumbent);
        }
    }

    #[test]
    fn non_finite_values_are_tolerated() {
        let obj = |h: Hyperparams| if h.c > 10.0 { f64::NAN } else { bowl(h) };
        let r = bayes_opt(obj, &BayesConfig::default(), 2).unwrap();
        assert!(r.best_value.is_finite());
        assert!(r.best.c <= 10.0);
        assert!(bayes_opt(|_| f64::NAN, &BayesConfig::default(), 2).is_err());
    }

    #[test]
    fn constant_objective_and_small_budget() {
        let r = bayes_opt(|_| 0.5, &BayesConfig::default(), 3).unwrap();
        assert_eq!(r.best_value, 0.5);
        let cfg = BayesConfig { budget: 4, ..BayesConfig::default() };
        assert!(bayes_opt(bowl, &cfg, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = bayes_opt(bowl, &BayesConfig::default(), 9).unwrap();
        let b = bayes_opt(bowl, &BayesConfig::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
