//! Streaming anti-aliased decimation for the telemetry EEG feed.

use std::f64::consts::PI;

const TAPS: usize = 63;
/// Passband edge as a fraction of the output Nyquist frequency.
const CUTOFF_FRACTION: f64 = 0.8;

/// Hamming-windowed sinc lowpass with unit DC gain.
fn lowpass_taps(factor: usize) -> Vec<f64> {
    let fc = CUTOFF_FRACTION * 0.5 / factor as f64;
    let mid = (TAPS - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..TAPS)
        .map(|i| {
            let k = i as f64 - mid;
            let sinc = if k == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * k).sin() / (PI * k) };
            sinc * (0.54 - 0.46 * (2.0 * PI * i as f64 / (TAPS - 1) as f64).cos())
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Keeps every `factor`-th filtered sample. State carries across blocks, so
/// output does not depend on how the input is split.
#[derive(Clone, Debug)]
pub struct Decimator {
    factor: usize,
    taps: Vec<f64>,
    /// Most recent `TAPS` inputs per channel, oldest first.
    history: Vec<Vec<f64>>,
    phase: usize,
}

impl Decimator {
    pub fn new(channels: usize, factor: usize) -> Self {
        let factor = factor.max(1);
        Self { factor, taps: lowpass_taps(factor), history: vec![vec![0.0; TAPS]; channels], phase: 0 }
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Feed one block (channel-major, equal lengths); returns the decimated
    /// samples it completes, channel-major.
    pub fn push(&mut self, block: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = block.first().map_or(0, Vec::len);
        let mut out = vec![Vec::with_capacity(n / self.factor + 1); self.history.len()];
        for i in 0..n {
            for (ch, hist) in self.history.iter_mut().enumerate() {
                hist.rotate_left(1);
                hist[TAPS - 1] = block[ch][i];
            }
            self.phase += 1;
            if self.phase == self.factor {
                self.phase = 0;
                for (ch, hist) in self.history.iter().enumerate() {
                    out[ch].push(hist.iter().zip(&self.taps).map(|(x, h)| x * h).sum());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_passes_with_unit_gain() {
        let mut d = Decimator::new(1, 4);
        let out = d.push(&[vec![2.0; 400]]);
        assert_eq!(out[0].len(), 100);
        assert!((out[0][99] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn split_blocks_match_one_shot() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut a = Decimator::new(1, 4);
        let whole = a.push(std::slice::from_ref(&x));
        let mut b = Decimator::new(1, 4);
        let mut parts = Vec::new();
        for chunk in x.chunks(50) {
            parts.extend(b.push(&[chunk.to_vec()])[0].clone());
        }
        assert_eq!(whole[0], parts);
    }

    #[test]
    fn aliasing_band_is_attenuated() {
        // 200 Hz at fs 1000 would alias onto 50 Hz after 4x decimation.
        let x: Vec<f64> = (0..4000).map(|i| (2.0 * PI * 200.0 * i as f64 / 1000.0).sin()).collect();
        let mut d = Decimator::new(1, 4);
        let out = d.push(&[x]);
        let tail = &out[0][100..];
        let rms = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
        assert!(rms < 0.01, "residual {rms}");
    }
}
