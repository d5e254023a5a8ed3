//! Wavelet packet denoising with SURE soft thresholds.

use serde::{Deserialize, Serialize};

use super::filters::WaveletKind;
use super::packet::{gray, WpTree};
use crate::error::{Error, Result};

/// Converts the median absolute coefficient of Gaussian noise to σ.
const MAD_TO_SIGMA: f64 = 0.6745;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub wavelet: WaveletKind,
    pub depth: usize,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self { wavelet: WaveletKind::Sym9, depth: 4 }
    }
}

pub fn soft_threshold(w: f64, t: f64) -> f64 {
    w.signum() * (w.abs() - t).max(0.0)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust noise level from coefficients dominated by noise.
pub fn mad_sigma(coeffs: &[f64]) -> f64 {
    median(coeffs.iter().map(|c| c.abs()).collect()) / MAD_TO_SIGMA
}

/// Threshold minimising Stein's unbiased risk estimate over
/// `{0} ∪ {|w_i| / σ}`, returned in the units of `w`. Ties resolve to the
/// smallest candidate. `σ = 0` yields 0.
pub fn sure_threshold(w: &[f64], sigma: f64) -> f64 {
    if !(sigma > 0.0) || w.is_empty() {
        return 0.0;
    }
    let n = w.len();
    let mut u: Vec<f64> = w.iter().map(|v| (v / sigma).abs()).collect();
    u.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &u {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let nf = n as f64;
    let zeros = u.iter().take_while(|&&v| v == 0.0).count();
    let mut best_t = 0.0;
    let mut best_risk = nf - 2.0 * zeros as f64;
    let mut k = 0;
    while k < n {
        let t = u[k];
        let mut c = k + 1;
        while c < n && u[c] == t {
            c += 1;
        }
        let risk = nf - 2.0 * c as f64 + prefix[c] + (n - c) as f64 * t * t;
        if risk < best_risk {
            best_risk = risk;
            best_t = t;
        }
        k = c;
    }
    best_t * sigma
}

/// Decompose, soft-threshold every leaf with its own SURE threshold, and
/// reconstruct. σ is estimated once from the highest-frequency leaf.
pub fn wp_denoise(x: &[f64], config: &DenoiseConfig) -> Result<Vec<f64>> {
    if config.depth == 0 {
        return Err(Error::InvalidArgument("denoising depth must be >= 1".into()));
    }
    let mut tree = WpTree::decompose(x, config.wavelet, config.depth)?;
    let top = gray((1 << config.depth) - 1);
    let sigma = mad_sigma(&tree.leaves()[top]);
    if sigma == 0.0 {
        return Ok(x.to_vec());
    }
    for leaf in tree.leaves_mut() {
        let t = sure_threshold(leaf, sigma);
        for c in leaf.iter_mut() {
            *c = soft_threshold(*c, t);
        }
    }
    Ok(tree.reconstruct())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Direct evaluation over every candidate.
    fn sure_brute(w: &[f64], sigma: f64) -> f64 {
        let u: Vec<f64> = w.iter().map(|v| (v / sigma).abs()).collect();
        let risk = |t: f64| {
            u.len() as f64 - 2.0 * u.iter().filter(|&&v| v <= t).count() as f64
                + u.iter().map(|&v| v.min(t).powi(2)).sum::<f64>()
        };
        let mut cands = vec![0.0];
        cands.extend(u.iter().copied());
        cands.sort_by(f64::total_cmp);
        let mut best = (f64::INFINITY, 0.0);
        for t in cands {
            let r = risk(t);
            if r < best.0 {
                best = (r, t);
            }
        }
        best.1 * sigma
    }

    #[test]
    fn sure_worked_example() {
        assert_eq!(sure_threshold(&[0.5, 2.0], 1.0), 0.5);
        assert_eq!(sure_threshold(&[0.5, 2.0], 0.0), 0.0);
    }

    #[test]
    fn sure_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let n = 5 + trial * 3;
            let mut w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            w[0] = w[1];
            let s = 0.5 + trial as f64 * 0.05;
            assert_eq!(sure_threshold(&w, s), sure_brute(&w, s));
        }
    }

    #[test]
    fn soft_threshold_shrinks() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn clean_tone_passes_through() {
        let x: Vec<f64> = (0..4000).map(|i| (2.0 * std::f64::consts::PI * 13.0 * i as f64 / 1000.0).sin()).collect();
        let y = wp_denoise(&x, &DenoiseConfig::default()).unwrap();
        let err: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err / norm < 1e-6);
    }

    #[test]
    fn white_noise_is_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let clean: Vec<f64> =
            (0..4000).map(|i| (2.0 * std::f64::consts::PI * 15.0 * i as f64 / 1000.0).sin()).collect();
        let noisy: Vec<f64> = clean
            .iter()
            .map(|c| c + 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let y = wp_denoise(&noisy, &DenoiseConfig::default()).unwrap();
        let mse = |a: &[f64]| a.iter().zip(&clean).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        assert!(mse(&y) < 0.5 * mse(&noisy));
    }
}
