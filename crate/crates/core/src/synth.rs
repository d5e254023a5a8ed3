//! Synthetic EEG conditioned on operator intent.
//!
//! Occipital channels carry a three-harmonic SSVEP while an LED is attended,
//! frontal channels carry raised-cosine blink pulses during a triple-blink
//! gesture, and every channel carries independent 1/f background noise.
//!
//! The generator is streaming ([`Synthesizer`]) so that the live session can
//! pull blocks as the simulation clock advances; [`generate`] is the batch
//! wrapper over a whole intent timeline. Output is a pure function of
//! (profile, timeline, duration): noise streams are keyed by channel, so the
//! background does not depend on the timeline.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Channel, EegSegment, DEFAULT_FS};

pub const LEFT_STIMULUS_HZ: f64 = 13.0;
pub const RIGHT_STIMULUS_HZ: f64 = 15.0;

/// Offset of the first blink from the gesture onset.
pub const BLINK_FIRST_OFFSET_S: f64 = 0.5;
pub const BLINK_SPACING_S: f64 = 1.0;
pub const BLINK_JITTER_S: f64 = 0.1;
/// Span in which a triple blink must be completed.
pub const GESTURE_WINDOW_S: f64 = 4.0;

/// Mean square of a unit raised-cosine pulse over its support.
const RAISED_COSINE_POWER: f64 = 3.0 / 8.0;

/// Blink peak, µV, giving `snr_db` of pulse energy over its support against
/// `noise_rms` µV of background.
pub fn blink_amp_for_snr(noise_rms: f64, snr_db: f64) -> f64 {
    noise_rms * (10f64.powf(snr_db / 10.0) / RAISED_COSINE_POWER).sqrt()
}

/// Corner frequencies of the one-pole sections summed into 1/f noise. Below
/// the first corner the spectrum is flat.
const PINK_CORNERS_HZ: [f64; 9] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntentKind {
    #[serde(rename = "LED_LEFT_13HZ")]
    LedLeft13Hz,
    #[serde(rename = "LED_RIGHT_15HZ")]
    LedRight15Hz,
    #[serde(rename = "NONE")]
    None,
    #[serde(rename = "BLINK_TRIPLE")]
    BlinkTriple,
}

impl IntentKind {
    pub fn stimulus_hz(self) -> Option<f64> {
        match self {
            IntentKind::LedLeft13Hz => Some(LEFT_STIMULUS_HZ),
            IntentKind::LedRight15Hz => Some(RIGHT_STIMULUS_HZ),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intent {
    pub kind: IntentKind,
    /// Seconds from the start of the timeline.
    pub onset: f64,
}

impl Intent {
    pub fn new(kind: IntentKind, onset: f64) -> Self {
        Self { kind, onset }
    }
}

/// Parameters of one synthetic subject.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectProfile {
    pub id: String,
    /// Fundamental, 2nd and 3rd harmonic amplitudes in µV.
    pub ssvep_amp: [f64; 3],
    /// RMS of the background noise in µV.
    pub noise_amp: f64,
    /// Blink peak in µV.
    pub blink_amp: f64,
    /// Blink support in seconds.
    pub blink_width: f64,
    pub channel_gain: BTreeMap<Channel, f64>,
    pub seed: u64,
}

impl SubjectProfile {
    /// Unit gains, 100 µV / 300 ms blinks, harmonics in ratio 1 : 0.5 : 0.25.
    pub fn new(id: impl Into<String>, fundamental_uv: f64, noise_uv: f64, seed: u64) -> Self {
        Self {
            id: id.into(),
            ssvep_amp: [fundamental_uv, 0.5 * fundamental_uv, 0.25 * fundamental_uv],
            noise_amp: noise_uv,
            blink_amp: 100.0,
            blink_width: 0.3,
            channel_gain: Channel::ALL.into_iter().map(|c| (c, 1.0)).collect(),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// SSVEP fundamental relative to background, in dB.
    pub fn ssvep_snr_db(&self) -> f64 {
        20.0 * (self.ssvep_amp[0] / self.noise_amp).log10()
    }

    /// Blink energy over its support relative to background power, in dB.
    pub fn blink_snr_db(&self) -> f64 {
        10.0 * (self.blink_amp.powi(2) * RAISED_COSINE_POWER / self.noise_amp.powi(2)).log10()
    }

    pub fn gain(&self, ch: Channel) -> f64 {
        self.channel_gain.get(&ch).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ssvep_amp.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Profile(format!("{}: ssvep_amp must be finite and >= 0", self.id)));
        }
        if !(self.noise_amp.is_finite() && self.noise_amp > 0.0) {
            return Err(Error::Profile(format!("{}: noise_amp must be > 0", self.id)));
        }
        if !(self.blink_amp.is_finite() && self.blink_amp >= 0.0) {
            return Err(Error::Profile(format!("{}: blink_amp must be >= 0", self.id)));
        }
        if !(self.blink_width > 0.05 && self.blink_width < 1.0) {
            return Err(Error::Profile(format!("{}: blink_width must lie in (0.05, 1.0) s", self.id)));
        }
        let keys: Vec<Channel> = self.channel_gain.keys().copied().collect();
        if keys != Channel::ALL.to_vec() {
            return Err(Error::Profile(format!("{}: channel_gain must cover exactly O1, O2, Oz, Fp1, Fp2", self.id)));
        }
        if self.channel_gain.values().any(|g| !g.is_finite()) {
            return Err(Error::Profile(format!("{}: non-finite channel gain", self.id)));
        }
        Ok(())
    }
}

/// On-disk form of a profile; channel gains are keyed by label.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProfileRecord {
    ssvep_amp: [f64; 3],
    noise_amp: f64,
    blink_amp: f64,
    blink_width: f64,
    channel_gain: BTreeMap<String, f64>,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileFile {
    version: u32,
    profiles: BTreeMap<String, ProfileRecord>,
}

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// A versioned collection of subject profiles, one per id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProfileSet {
    pub profiles: BTreeMap<String, SubjectProfile>,
}

impl ProfileSet {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| Error::Profile(e.to_string()))?;
        if file.version != PROFILE_FORMAT_VERSION {
            return Err(Error::Profile(format!("unsupported profile format version {}", file.version)));
        }
        let mut profiles = BTreeMap::new();
        for (id, rec) in file.profiles {
            let channel_gain = rec
                .channel_gain
                .iter()
                .map(|(k, v)| Ok((k.parse::<Channel>()?, *v)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let p = SubjectProfile {
                id: id.clone(),
                ssvep_amp: rec.ssvep_amp,
                noise_amp: rec.noise_amp,
                blink_amp: rec.blink_amp,
                blink_width: rec.blink_width,
                channel_gain,
                seed: rec.seed,
            };
            p.validate()?;
            profiles.insert(id, p);
        }
        Ok(Self { profiles })
    }

    pub fn to_toml_string(&self) -> String {
        let file = ProfileFile {
            version: PROFILE_FORMAT_VERSION,
            profiles: self
                .profiles
                .iter()
                .map(|(id, p)| {
                    let rec = ProfileRecord {
                        ssvep_amp: p.ssvep_amp,
                        noise_amp: p.noise_amp,
                        blink_amp: p.blink_amp,
                        blink_width: p.blink_width,
                        channel_gain: p.channel_gain.iter().map(|(c, g)| (c.label().to_string(), *g)).collect(),
                        seed: p.seed,
                    };
                    (id.clone(), rec)
                })
                .collect(),
        };
        toml::to_string(&file).expect("profile set serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&SubjectProfile> {
        self.profiles.get(id)
    }

    pub fn insert(&mut self, profile: SubjectProfile) {
        self.profiles.insert(profile.id.clone(), profile);
    }
}

/// Raised-cosine pulse value at time `t`.
pub fn raised_cosine(t: f64, t_center: f64, amp: f64, width: f64) -> f64 {
    let d = t - t_center;
    if d.abs() >= width / 2.0 {
        0.0
    } else {
        amp * 0.5 * (1.0 + (2.0 * PI * d / width).cos())
    }
}

/// A sampled single-channel waveform.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub t0: f64,
    pub fs: f64,
    pub samples: Vec<f64>,
}

/// The blink pulse of `profile` centred on `t_center`, sampled on the
/// `k / fs` grid across its support.
pub fn blink_pulse(profile: &SubjectProfile, t_center: f64, fs: f64) -> Waveform {
    let half = profile.blink_width / 2.0;
    let first = ((t_center - half) * fs).ceil() as i64;
    let last = ((t_center + half) * fs).floor() as i64;
    let samples = (first..=last)
        .map(|k| raised_cosine(k as f64 / fs, t_center, profile.blink_amp, profile.blink_width))
        .collect();
    Waveform { t0: first as f64 / fs, fs, samples }
}

/// Sum of one-pole lowpass sections with log-spaced corners, which yields an
/// approximately 1/f spectrum between the first and last corner.
#[derive(Clone, Debug)]
struct PinkNoise {
    a: Vec<f64>,
    drive: Vec<f64>,
    state: Vec<f64>,
    scale: f64,
    rng: ChaCha8Rng,
}

impl PinkNoise {
    fn new(fs: f64, rms: f64, mut rng: ChaCha8Rng) -> Self {
        let a: Vec<f64> = PINK_CORNERS_HZ.iter().map(|f| (-2.0 * PI * f / fs).exp()).collect();
        // Drive variance 1/f_k makes the summed spectrum fall as 1/f.
        let drive: Vec<f64> = PINK_CORNERS_HZ.iter().map(|f| 1.0 / f.sqrt()).collect();
        let var: Vec<f64> = a.iter().zip(&drive).map(|(a, d)| d * d * (1.0 - a) / (1.0 + a)).collect();
        let total: f64 = var.iter().sum();
        // Start from the stationary distribution so there is no warm-up transient.
        let state = var.iter().map(|v| v.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { a, drive, state, scale: rms / total.sqrt(), rng }
    }

    fn next(&mut self) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.state.len() {
            let z: f64 = self.rng.sample(StandardNormal);
            self.state[k] = self.a[k] * self.state[k] + (1.0 - self.a[k]) * self.drive[k] * z;
            sum += self.state[k];
        }
        self.scale * sum
    }
}

/// `len` samples of the generator's background noise at `rms` µV.
pub fn pink_noise(len: usize, fs: f64, rms: f64, seed: u64) -> Vec<f64> {
    let mut gen = PinkNoise::new(fs, rms, ChaCha8Rng::seed_from_u64(seed));
    (0..len).map(|_| gen.next()).collect()
}

#[derive(Clone, Debug)]
struct ActiveIntent {
    kind: IntentKind,
    phases: [f64; 3],
    blink_centers: Vec<f64>,
}

/// Streaming EEG generator for one subject.
#[derive(Clone, Debug)]
pub struct Synthesizer {
    profile: SubjectProfile,
    fs: f64,
    next_sample: u64,
    noise: Vec<PinkNoise>,
    intent_rng: ChaCha8Rng,
    active: ActiveIntent,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Synthesizer {
    pub fn new(profile: &SubjectProfile) -> Result<Self> {
        profile.validate()?;
        let fs = DEFAULT_FS;
        let noise = Channel::ALL
            .iter()
            .enumerate()
            .map(|(i, _)| PinkNoise::new(fs, profile.noise_amp, stream_rng(profile.seed, 1 + i as u64)))
            .collect();
        Ok(Self {
            profile: profile.clone(),
            fs,
            next_sample: 0,
            noise,
            intent_rng: stream_rng(profile.seed, 0),
            active: ActiveIntent { kind: IntentKind::None, phases: [0.0; 3], blink_centers: Vec::new() },
        })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Time of the next sample to be produced.
    pub fn time(&self) -> f64 {
        self.next_sample as f64 / self.fs
    }

    pub fn intent(&self) -> IntentKind {
        self.active.kind
    }

    pub fn profile(&self) -> &SubjectProfile {
        &self.profile
    }

    /// Switch intent at the next sample. Phases and blink jitter are drawn
    /// here, so they vary per trial but are fixed by the seed.
    pub fn set_intent(&mut self, kind: IntentKind) {
        let onset = self.time();
        let phases = [
            self.intent_rng.random_range(0.0..2.0 * PI),
            self.intent_rng.random_range(0.0..2.0 * PI),
            self.intent_rng.random_range(0.0..2.0 * PI),
        ];
        let blink_centers = if kind == IntentKind::BlinkTriple {
            (0..3)
                .map(|i| {
                    let jitter = self.intent_rng.random_range(-BLINK_JITTER_S..=BLINK_JITTER_S);
                    onset + BLINK_FIRST_OFFSET_S + i as f64 * BLINK_SPACING_S + jitter
                })
                .collect()
        } else {
            Vec::new()
        };
        self.active = ActiveIntent { kind, phases, blink_centers };
    }

    /// Blink centres of the active gesture, if any.
    pub fn blink_centers(&self) -> &[f64] {
        &self.active.blink_centers
    }

    /// Produce `n` samples for all five channels.
    pub fn next_block(&mut self, n: usize) -> EegSegment {
        let t0 = self.time();
        let mut data = vec![Vec::with_capacity(n); Channel::ALL.len()];
        let stim = self.active.kind.stimulus_hz();
        for _ in 0..n {
            let t = self.next_sample as f64 / self.fs;
            let ssvep = stim.map_or(0.0, |f| {
                (0..3)
                    .map(|h| {
                        let hf = (h + 1) as f64 * f;
                        self.profile.ssvep_amp[h] * (2.0 * PI * hf * t + self.active.phases[h]).sin()
                    })
                    .sum::<f64>()
            });
            let blink: f64 = self
                .active
                .blink_centers
                .iter()
                .map(|&c| raised_cosine(t, c, self.profile.blink_amp, self.profile.blink_width))
                .sum();
            for (i, ch) in Channel::ALL.into_iter().enumerate() {
                let g = self.profile.gain(ch);
                let signal = if ch.is_occipital() { g * ssvep } else { g * blink };
                data[i].push(signal + self.noise[i].next());
            }
            self.next_sample += 1;
        }
        EegSegment::new(Channel::ALL.to_vec(), self.fs, data, t0).expect("synthesized block is well formed")
    }
}

/// Minimum span a triple-blink intent needs so all three pulses fit.
pub fn min_blink_span(profile: &SubjectProfile) -> f64 {
    BLINK_FIRST_OFFSET_S + 2.0 * BLINK_SPACING_S + BLINK_JITTER_S + profile.blink_width / 2.0
}

/// Synthesize `duration` seconds following `timeline`. Intents must start at
/// 0, have strictly increasing onsets and each hold until the next onset.
pub fn generate(profile: &SubjectProfile, timeline: &[Intent], duration: f64) -> Result<EegSegment> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidTimeline(format!("duration {duration}")));
    }
    let first = timeline.first().ok_or_else(|| Error::InvalidTimeline("empty timeline".into()))?;
    if first.onset.abs() > 1e-9 {
        return Err(Error::InvalidTimeline("timeline must start at 0".into()));
    }
    for w in timeline.windows(2) {
        if !(w[1].onset > w[0].onset) {
            return Err(Error::InvalidTimeline(format!(
                "overlapping intents at {} s and {} s",
                w[0].onset, w[1].onset
            )));
        }
    }
    if timeline.last().is_some_and(|i| i.onset >= duration) {
        return Err(Error::InvalidTimeline("intent starts after the end of the segment".into()));
    }
    let mut synth = Synthesizer::new(profile)?;
    let fs = synth.fs();
    let total = (duration * fs).round() as usize;
    let need = min_blink_span(profile);
    let mut out: Option<EegSegment> = None;
    for (i, intent) in timeline.iter().enumerate() {
        let end = timeline.get(i + 1).map_or(duration, |n| n.onset);
        if intent.kind == IntentKind::BlinkTriple && end - intent.onset < need - 1e-9 {
            return Err(Error::InvalidTimeline(format!(
                "triple blink at {} s needs {need:.2} s, has {:.2} s",
                intent.onset,
                end - intent.onset
            )));
        }
        let start_sample = (intent.onset * fs).round() as usize;
        let end_sample = if i + 1 == timeline.len() { total } else { (end * fs).round() as usize };
        synth.set_intent(intent.kind);
        let block = synth.next_block(end_sample.saturating_sub(start_sample));
        match out.as_mut() {
            None => out = Some(block),
            Some(seg) => seg.append(&block)?,
        }
    }
    Ok(out.expect("timeline is non-empty"))
}
