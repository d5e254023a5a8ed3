//! Blink detection on the frontal channels by normalized cross-correlation
//! against a stored blink template, and triple-blink gesture recognition.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Channel, EegSegment};
use crate::synth::raised_cosine;

pub const DEFAULT_THRESHOLD: f64 = 0.6;
pub const DEFAULT_PROMINENCE: f64 = 1.2;
pub const DEFAULT_REFRACTORY_S: f64 = 0.2;
pub const DEFAULT_TEMPLATE_WIDTH_S: f64 = 0.3;
pub const BAND_LO_HZ: f64 = 0.1;
pub const BAND_HI_HZ: f64 = 70.0;

/// Second-order section in transposed direct form II, `a0` normalized to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn from_raw(b: [f64; 3], a: [f64; 3]) -> Self {
        Self { b: b.map(|v| v / a[0]), a: [a[1] / a[0], a[2] / a[0]] }
    }

    /// Bilinear lowpass with prewarped corner `f0`.
    pub fn lowpass(f0: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_raw([(1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    pub fn highpass(f0: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_raw([(1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a[0] + self.a[1])
    }

    /// Magnitude response at `f` Hz.
    pub fn gain_at(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * z1.0 + self.b[2] * z2.0, self.b[1] * z1.1 + self.b[2] * z2.1);
        let den = (1.0 + self.a[0] * z1.0 + self.a[1] * z2.0, self.a[0] * z1.1 + self.a[1] * z2.1);
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }

    /// State reached after a long run of unit input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        let z1 = self.b[1] - self.a[0] * g + z2;
        [z1, z2]
    }
}

/// Cascade of second-order sections.
#[derive(Clone, Debug, PartialEq)]
pub struct Sos(pub Vec<Biquad>);

impl Sos {
    /// Butterworth band-pass: 2nd-order highpass at `lo`, 4th-order lowpass at `hi`.
    pub fn butter_bandpass(lo: f64, hi: f64, fs: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
            return Err(Error::InvalidArgument(format!("band {lo}..{hi} Hz invalid at fs {fs}")));
        }
        let q4 = |k: usize| 1.0 / (2.0 * ((2 * k + 1) as f64 * PI / 8.0).cos());
        Ok(Sos(vec![
            Biquad::highpass(lo, std::f64::consts::FRAC_1_SQRT_2, fs),
            Biquad::lowpass(hi, q4(0), fs),
            Biquad::lowpass(hi, q4(1), fs),
        ]))
    }

    pub fn gain_at(&self, f: f64, fs: f64) -> f64 {
        self.0.iter().map(|s| s.gain_at(f, fs)).product()
    }

    /// Causal filtering; `x0` seeds every section in its steady state for a
    /// constant input of that value.
    pub fn filter(&self, x: &[f64], x0: Option<f64>) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut level = x0.unwrap_or(0.0);
        for s in &self.0 {
            let [mut z1, mut z2] = if x0.is_some() { s.step_state().map(|v| v * level) } else { [0.0, 0.0] };
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[0] * out + z2;
                z2 = s.b[2] * xin - s.a[1] * out;
                *v = out;
            }
            level *= s.dc_gain();
        }
        y
    }

    /// Zero-phase forward-backward filtering with the conventional
    /// `3 · (2 · sections + 1)` sample odd-extension pad.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        self.filtfilt_padded(x, 3 * (2 * self.0.len() + 1))
    }

    /// Zero-phase forward-backward filtering with an odd extension of `pad`
    /// samples at each end, capped at `len − 1`.
    pub fn filtfilt_padded(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = pad.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        let fwd = self.filter(&ext, Some(ext[0]));
        let rev: Vec<f64> = fwd.into_iter().rev().collect();
        let back = self.filter(&rev, Some(rev[0]));
        back.into_iter().rev().skip(pad).take(n).collect()
    }
}

/// Zero-phase Butterworth band-pass of every channel.
///
/// The pad spans three time constants of the highpass corner, capped at the
/// segment length; a short pad leaves a slow start-up transient across the
/// whole window.
pub fn bandpass(seg: &EegSegment, lo: f64, hi: f64) -> Result<EegSegment> {
    let sos = Sos::butter_bandpass(lo, hi, seg.fs())?;
    let pad = (3.0 * seg.fs() / (2.0 * PI * lo)).ceil() as usize;
    Ok(seg.map_rows(|r| sos.filtfilt_padded(r, pad)))
}

/// Blink template. `normalized` is zero-mean with unit energy.
#[derive(Clone, Debug, PartialEq)]
pub struct BlinkTemplate {
    waveform: Vec<f64>,
    normalized: Vec<f64>,
    fs: f64,
    peak_index: usize,
}

impl BlinkTemplate {
    pub fn new(waveform: Vec<f64>, fs: f64) -> Result<Self> {
        if waveform.len() < 3 {
            return Err(Error::InvalidArgument("template needs at least 3 samples".into()));
        }
        if waveform.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mean = waveform.iter().sum::<f64>() / waveform.len() as f64;
        let mut normalized: Vec<f64> = waveform.iter().map(|v| v - mean).collect();
        let norm = normalized.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("template is constant".into()));
        }
        normalized.iter_mut().for_each(|v| *v /= norm);
        let peak_index = waveform
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("non-empty");
        Ok(Self { waveform, normalized, fs, peak_index })
    }

    /// Raised-cosine pulse of `width` seconds, unit amplitude.
    pub fn raised_cosine(fs: f64, width: f64) -> Self {
        let half = (width / 2.0 * fs).round() as i64;
        let w = (-half..=half).map(|k| raised_cosine(k as f64 / fs, 0.0, 1.0, width)).collect();
        Self::new(w, fs).expect("valid raised cosine")
    }

    /// One µV value per line; blank lines and a non-numeric header are skipped.
    pub fn from_csv(text: &str, fs: f64) -> Result<Self> {
        let mut vals = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let s = line.split(',').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            match s.parse::<f64>() {
                Ok(v) => vals.push(v),
                Err(_) if i == 0 => {}
                Err(e) => return Err(Error::InvalidArgument(format!("template line {}: {e}", i + 1))),
            }
        }
        Self::new(vals, fs)
    }

    pub fn load(path: impl AsRef<Path>, fs: f64) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?, fs)
    }

    pub fn waveform(&self) -> &[f64] {
        &self.waveform
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    pub fn len(&self) -> usize {
        self.waveform.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waveform.is_empty()
    }
}

impl Default for BlinkTemplate {
    fn default() -> Self {
        Self::raised_cosine(crate::signal::DEFAULT_FS, DEFAULT_TEMPLATE_WIDTH_S)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlinkEvent {
    /// Time of the template peak, in segment time.
    pub t: f64,
    pub ccv: f64,
    pub channel: String,
}

#[derive(Clone, Debug)]
pub struct BlinkDetector {
    pub template: BlinkTemplate,
    /// Minimum normalized cross-correlation.
    pub threshold: f64,
    /// Minimum matched amplitude relative to the robust noise level of the
    /// segment.
    pub prominence: f64,
    pub refractory_s: f64,
}

impl Default for BlinkDetector {
    fn default() -> Self {
        Self {
            template: BlinkTemplate::default(),
            threshold: DEFAULT_THRESHOLD,
            prominence: DEFAULT_PROMINENCE,
            refractory_s: DEFAULT_REFRACTORY_S,
        }
    }
}

fn robust_sigma(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let med = v[v.len() / 2];
    let mut dev: Vec<f64> = x.iter().map(|a| (a - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    dev[dev.len() / 2] / 0.6745
}

impl BlinkDetector {
    pub fn with_threshold(template: BlinkTemplate, threshold: f64) -> Self {
        Self { template, threshold, ..Self::default() }
    }

    /// Average of the frontal channels present in `seg`.
    fn frontal_trace(seg: &EegSegment) -> Result<(Vec<f64>, String)> {
        let rows: Vec<(Channel, &[f64])> =
            Channel::FRONTAL.iter().filter_map(|&c| seg.channel(c).map(|r| (c, r))).collect();
        if rows.is_empty() {
            return Err(Error::MissingChannel("Fp1/Fp2".into()));
        }
        let k = rows.len() as f64;
        let trace = (0..seg.len()).map(|i| rows.iter().map(|(_, r)| r[i]).sum::<f64>() / k).collect();
        let label = rows.iter().map(|(c, _)| c.label()).collect::<Vec<_>>().join("+");
        Ok((trace, label))
    }

    /// Normalized cross-correlation and matched amplitude at each lag.
    pub fn scores(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let tc = self.template.normalized();
        let m = tc.len();
        if x.len() < m {
            return Err(Error::SignalTooShort { len: x.len(), filter_len: m });
        }
        let mut ps = vec![0.0; x.len() + 1];
        let mut ps2 = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            ps[i + 1] = ps[i] + v;
            ps2[i + 1] = ps2[i] + v * v;
        }
        let lags = x.len() - m + 1;
        let mut ncc = vec![0.0; lags];
        let mut amp = vec![0.0; lags];
        for i in 0..lags {
            let s = &x[i..i + m];
            let sum = ps[i + m] - ps[i];
            let energy = ps2[i + m] - ps2[i] - sum * sum / m as f64;
            let d: f64 = s.iter().zip(tc).map(|(a, b)| a * b).sum();
            amp[i] = d;
            let scale = (ps2[i + m] - ps2[i]).max(f64::MIN_POSITIVE);
            if energy > 1e-12 * scale {
                ncc[i] = (d / energy.sqrt()).clamp(-1.0, 1.0);
            }
        }
        Ok((ncc, amp))
    }

    pub fn detect(&self, seg: &EegSegment) -> Result<Vec<BlinkEvent>> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        let (x, label) = Self::frontal_trace(seg)?;
        let (ncc, amp) = self.scores(&x)?;
        let sigma = robust_sigma(&x);
        let gate_scale = sigma * (self.template.len() as f64).sqrt();
        let passes =
            |i: usize| ncc[i] >= self.threshold && (gate_scale == 0.0 || amp[i] / gate_scale >= self.prominence);
        let n = ncc.len();
        let mut cands: Vec<usize> = (0..n)
            .filter(|&i| passes(i) && (i == 0 || ncc[i] > ncc[i - 1]) && (i + 1 == n || ncc[i] >= ncc[i + 1]))
            .collect();
        cands.sort_by(|&a, &b| ncc[b].total_cmp(&ncc[a]).then(a.cmp(&b)));
        let gap = (self.refractory_s * seg.fs()).round() as usize;
        let mut kept: Vec<usize> = Vec::new();
        for c in cands {
            if kept.iter().all(|&k| k.abs_diff(c) >= gap) {
                kept.push(c);
            }
        }
        kept.sort_unstable();
        let peak = self.template.peak_index();
        Ok(kept
            .into_iter()
            .map(|i| BlinkEvent { t: seg.t0() + (i + peak) as f64 / seg.fs(), ccv: ncc[i], channel: label.clone() })
            .collect())
    }
}

/// Events in `seg` above `threshold`, with the default gate and refractory.
pub fn detect_blinks(seg: &EegSegment, template: &BlinkTemplate, threshold: f64) -> Result<Vec<BlinkEvent>> {
    BlinkDetector::with_threshold(template.clone(), threshold).detect(seg)
}

/// True iff the largest number of events inside any span of `window`
/// seconds is exactly three.
pub fn is_triple_blink(events: &[BlinkEvent], window: f64) -> bool {
    max_events_in_span(events, window) == 3
}

pub fn max_events_in_span(events: &[BlinkEvent], window: f64) -> usize {
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..events.len() {
        while events[hi].t - events[lo].t > window {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}
