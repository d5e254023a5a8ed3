//! SSVEP feature extraction: wavelet subbands of each occipital channel
//! correlated against sinusoidal references.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::signal::{Channel, EegSegment};
use crate::synth::{LEFT_STIMULUS_HZ, RIGHT_STIMULUS_HZ};
use crate::wavelet::{detrend, wp_denoise, DenoiseConfig, WaveletKind, WpTree};

pub const FEATURE_DIM: usize = 18;
pub const WINDOW_S: f64 = 4.0;
pub const STIMULI_HZ: [f64; 2] = [LEFT_STIMULUS_HZ, RIGHT_STIMULUS_HZ];
pub const HARMONICS: usize = 3;
/// Frequency-ordered depth-6 nodes holding harmonic 1, 2 and 3.
pub const HARMONIC_NODES: [usize; HARMONICS] = [1, 3, 5];
pub const FEATURE_WAVELET: WaveletKind = WaveletKind::Db7;
pub const FEATURE_DEPTH: usize = 6;

/// Flat position of the feature for `(electrode, harmonic, stimulus)`, all
/// zero-based. Electrode-major, then harmonic, then stimulus.
pub fn feature_index(electrode: usize, harmonic: usize, stimulus: usize) -> usize {
    electrode * 6 + harmonic * 2 + stimulus
}

/// Column names in canonical order, e.g. `O1_n1_f13`.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for ch in Channel::OCCIPITAL {
        for n in 1..=HARMONICS {
            for f in STIMULI_HZ {
                names.push(format!("{}_n{}_f{}", ch.label(), n, f as u32));
            }
        }
    }
    names
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_DIM] {
        &self.0
    }

    pub fn get(&self, electrode: usize, harmonic: usize, stimulus: usize) -> f64 {
        self.0[feature_index(electrode, harmonic, stimulus)]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; FEATURE_DIM] =
            v.try_into().map_err(|_| Error::WrongDimension { got: v.len(), expected: FEATURE_DIM })?;
        Ok(Self(arr))
    }

    /// Comma-separated values in canonical order; round-trips exactly.
    pub fn to_csv_row(&self) -> String {
        self.0.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let vals = row
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_slice(&vals)
    }
}

/// Orthonormal basis of the centered sin/cos pair at one frequency.
#[derive(Clone, Debug)]
pub struct Reference {
    pub freq: f64,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

fn center(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

impl Reference {
    pub fn new(freq: f64, fs: f64, len: usize) -> Self {
        let w = 2.0 * std::f64::consts::PI * freq / fs;
        let mut q1 = center(&(0..len).map(|i| (w * i as f64).sin()).collect::<Vec<_>>());
        let mut q2 = center(&(0..len).map(|i| (w * i as f64).cos()).collect::<Vec<_>>());
        normalize(&mut q1);
        let p = dot(&q1, &q2);
        q2.iter_mut().zip(&q1).for_each(|(b, a)| *b -= p * a);
        normalize(&mut q2);
        Self { freq, q1, q2 }
    }
}

/// Largest canonical correlation between single-channel `x` and the
/// reference span, in `[0, 1]`. Zero-variance input gives 0.
pub fn cca_coefficient(x: &[f64], r: &Reference) -> Result<f64> {
    if x.len() != r.q1.len() {
        return Err(Error::WrongWindowLength { got: x.len(), expected: r.q1.len() });
    }
    let xc = center(x);
    let norm = dot(&xc, &xc).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Ok(0.0);
    }
    let a = dot(&xc, &r.q1);
    let b = dot(&xc, &r.q2);
    Ok(((a * a + b * b).sqrt() / norm).clamp(0.0, 1.0))
}

/// Largest canonical correlation between the column sets of `x` and `y`
/// (rows are observations). Used as an independent check of the
/// single-channel shortcut.
pub fn cca_general(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let center_cols = |m: &DMatrix<f64>| {
        let mut c = m.clone();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c
    };
    let qx = center_cols(x).qr().q();
    let qy = center_cols(y).qr().q();
    let s = (qx.transpose() * qy).singular_values();
    s.max().clamp(0.0, 1.0)
}

/// Reference cache and pipeline settings for one window length.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    fs: f64,
    len: usize,
    denoise: DenoiseConfig,
    /// `refs[harmonic][stimulus]`.
    refs: Arc<Vec<[Reference; 2]>>,
}

impl FeatureExtractor {
    pub fn new(fs: f64, window_s: f64) -> Self {
        let len = (fs * window_s).round() as usize;
        let refs = (1..=HARMONICS).map(|n| STIMULI_HZ.map(|f| Reference::new(n as f64 * f, fs, len))).collect();
        Self { fs, len, denoise: DenoiseConfig::default(), refs: Arc::new(refs) }
    }

    /// Shared extractor for `(fs, window)`; built once per process.
    pub fn cached(fs: f64, window_s: f64) -> Self {
        static CACHE: OnceLock<Mutex<HashMap<(u64, u64), FeatureExtractor>>> = OnceLock::new();
        let key = (fs.to_bits(), window_s.to_bits());
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key).or_insert_with(|| Self::new(fs, window_s)).clone()
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn reference(&self, harmonic: usize, stimulus: usize) -> &Reference {
        &self.refs[harmonic][stimulus]
    }

    /// Six features of one electrode: harmonic-major, then stimulus.
    pub fn electrode_features(&self, x: &[f64]) -> Result<[f64; 6]> {
        if x.len() != self.len {
            return Err(Error::WrongWindowLength { got: x.len(), expected: self.len });
        }
        let clean = wp_denoise(&detrend(x)?, &self.denoise)?;
        let tree = WpTree::decompose(&clean, FEATURE_WAVELET, FEATURE_DEPTH)?;
        let mut out = [0.0; 6];
        for (h, &node) in HARMONIC_NODES.iter().enumerate() {
            let sub = tree.reconstruct_node(FEATURE_DEPTH, node)?;
            for s in 0..2 {
                out[h * 2 + s] = cca_coefficient(&sub, &self.refs[h][s])?;
            }
        }
        Ok(out)
    }

    /// Window must hold exactly O1, O2 and Oz, in any order.
    pub fn extract(&self, window: &EegSegment, exec: Execution) -> Result<FeatureVector> {
        let mut chans = window.channels().to_vec();
        chans.sort();
        if chans != Channel::OCCIPITAL {
            return Err(Error::InvalidArgument(format!(
                "feature window needs channels O1, O2, Oz; got {:?}",
                window.channels()
            )));
        }
        if window.fs() != self.fs {
            return Err(Error::InvalidArgument(format!("window sampled at {} Hz, expected {}", window.fs(), self.fs)));
        }
        if window.len() != self.len {
            return Err(Error::WrongWindowLength { got: window.len(), expected: self.len });
        }
        let rows: Vec<&[f64]> = Channel::OCCIPITAL.iter().map(|&c| window.channel(c).expect("checked")).collect();
        let per = exec.map(&rows, |x| self.electrode_features(x));
        let mut v = [0.0; FEATURE_DIM];
        for (e, feats) in per.into_iter().enumerate() {
            v[e * 6..e * 6 + 6].copy_from_slice(&feats?);
        }
        Ok(FeatureVector(v))
    }
}

/// Features of a 4 s occipital window.
pub fn extract_features(window: &EegSegment) -> Result<FeatureVector> {
    FeatureExtractor::cached(window.fs(), WINDOW_S).extract(window, Execution::Sequential)
}
