//! The calibration and online-test protocol run on synthetic subjects.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decoder::{CommandSource, Decoder, DecoderConfig};
use crate::error::Result;
use crate::exec::Execution;
use crate::features::{FeatureExtractor, WINDOW_S};
use crate::metrics::{itr_or_zero, success_rate, COMMAND_TIME_S, ITR_CLASSES};
use crate::signal::DEFAULT_FS;
use crate::sim::CommandKind;
use crate::svm::{fit_pipeline, BayesConfig, FitReport, Hyperparams, LabeledDataset, Sample, SsvepClass, TrainedModel};
use crate::synth::{IntentKind, SubjectProfile, Synthesizer};

pub const CALIBRATION_TRIALS: usize = 10;
pub const TEST_TRIALS: usize = 5;
pub const TRIAL_S: f64 = 15.0;
pub const HOP_S: f64 = 1.0;
pub const ONLINE_TURN_TRIALS: usize = 20;
pub const ONLINE_BLINK_TRIALS: usize = 12;
/// Gaze or gesture period of one online trial.
pub const ONLINE_INTENT_S: f64 = 4.0;
/// Extra streaming after the intent period, so the debouncer sees two
/// windows.
pub const ONLINE_HOLD_S: f64 = 1.0;
const STREAM_BLOCK: usize = 100;

const TAG_CALIBRATION: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_ONLINE: u64 = 3;
const TAG_FIT: u64 = 4;

/// Deterministic child seed of `master` for a path of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut z = master;
    for &t in tags {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

pub fn class_intent(class: SsvepClass) -> IntentKind {
    match class {
        SsvepClass::Left13 => IntentKind::LedLeft13Hz,
        SsvepClass::Right15 => IntentKind::LedRight15Hz,
        SsvepClass::Baseline => IntentKind::None,
    }
}

fn class_tag(class: SsvepClass) -> u64 {
    match class {
        SsvepClass::Left13 => 0,
        SsvepClass::Right15 => 1,
        SsvepClass::Baseline => 2,
    }
}

/// `trials` recordings of `TRIAL_S` seconds per class, cut into 4 s
/// windows at a 1 s hop and featurized.
fn record_session(
    profile: &SubjectProfile,
    seed: u64,
    tag: u64,
    trials: usize,
    exec: Execution,
) -> Result<LabeledDataset> {
    let extractor = FeatureExtractor::cached(DEFAULT_FS, WINDOW_S);
    let win = extractor.window_len();
    let hop = (HOP_S * DEFAULT_FS) as usize;
    let total = (TRIAL_S * DEFAULT_FS) as usize;
    let n_windows = (total - win) / hop + 1;
    let jobs: Vec<(SsvepClass, usize, usize)> = SsvepClass::ALL
        .iter()
        .flat_map(|&c| (0..trials).flat_map(move |t| (0..n_windows).map(move |w| (c, t, w))))
        .collect();
    let recordings: Vec<Vec<_>> = SsvepClass::ALL
        .iter()
        .map(|&c| {
            exec.map_range(trials, |t| -> Result<_> {
                let p = profile.with_seed(derive_seed(seed, &[tag, class_tag(c), t as u64]));
                let mut synth = Synthesizer::new(&p)?;
                synth.set_intent(class_intent(c));
                synth.next_block(total).select(&crate::signal::Channel::OCCIPITAL)
            })
        })
        .collect();
    let feats = exec.map(&jobs, |&(c, t, w)| -> Result<Sample> {
        let rec = recordings[class_tag(c) as usize][t]
            .as_ref()
            .map_err(|e| crate::error::Error::InvalidDataset(format!("recording failed: {e}")))?;
        let window = rec.slice(w * hop, win)?;
        let f = extractor.extract(&window, Execution::Sequential)?;
        Ok(Sample {
            features: f.values().to_vec(),
            label: c,
            subject: profile.id.clone(),
            trial: t as u32,
            window: w as u32,
        })
    });
    LabeledDataset::new(feats.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Ten 15 s trials per class → 360 labelled windows.
pub fn run_calibration(profile: &SubjectProfile, seed: u64, exec: Execution) -> Result<LabeledDataset> {
    record_session(profile, seed, TAG_CALIBRATION, CALIBRATION_TRIALS, exec)
}

/// A fresh held-out session recorded with the calibration protocol.
pub fn run_test_session(profile: &SubjectProfile, seed: u64, exec: Execution) -> Result<LabeledDataset> {
    record_session(profile, seed, TAG_TEST, TEST_TRIALS, exec)
}

/// Window-level accuracy of `model` on `data`, in [0, 1].
pub fn window_accuracy(model: &TrainedModel, data: &LabeledDataset) -> Result<f64> {
    let mut correct = 0;
    for s in data.samples() {
        if model.predict(&s.features)?.class == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len().max(1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrialKind {
    Left,
    Right,
    GoStop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub kind: TrialKind,
    pub intended: CommandKind,
    /// First command the decoder emitted during the trial.
    pub actual: Option<CommandKind>,
    /// Seconds from trial onset to that command.
    pub latency: Option<f64>,
}

impl TrialOutcome {
    pub fn success(&self) -> bool {
        self.actual == Some(self.intended)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnlineCounts {
    pub intended_l: usize,
    pub actual_l: usize,
    pub intended_r: usize,
    pub actual_r: usize,
    pub intended_gs: usize,
    pub actual_gs: usize,
}

impl OnlineCounts {
    pub fn total(&self) -> usize {
        self.intended_l + self.intended_r + self.intended_gs
    }

    pub fn successes(&self) -> usize {
        self.actual_l + self.actual_r + self.actual_gs
    }

    pub fn success_rate(&self) -> f64 {
        success_rate(self.successes(), self.total())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineOutcome {
    pub trials: Vec<TrialOutcome>,
}

impl OnlineOutcome {
    pub fn counts(&self) -> OnlineCounts {
        let mut c = OnlineCounts::default();
        for t in &self.trials {
            let ok = usize::from(t.success());
            match t.kind {
                TrialKind::Left => {
                    c.intended_l += 1;
                    c.actual_l += ok;
                }
                TrialKind::Right => {
                    c.intended_r += 1;
                    c.actual_r += ok;
                }
                TrialKind::GoStop => {
                    c.intended_gs += 1;
                    c.actual_gs += ok;
                }
            }
        }
        c
    }
}

/// Stream one trial through a fresh decoder; returns the first command and
/// its latency from onset.
fn online_trial(
    model: &Arc<TrainedModel>,
    profile: &SubjectProfile,
    intent: IntentKind,
    moving: bool,
) -> Result<Option<(CommandKind, CommandSource, f64)>> {
    let mut synth = Synthesizer::new(profile)?;
    let mut decoder = Decoder::new(model.clone(), synth.fs(), DecoderConfig::default(), Execution::Sequential);
    let fs = synth.fs();
    let intent_samples = (ONLINE_INTENT_S * fs).round() as usize;
    let total = ((ONLINE_INTENT_S + ONLINE_HOLD_S) * fs).round() as usize;
    synth.set_intent(intent);
    let mut produced = 0;
    while produced < total {
        if produced == intent_samples && intent == IntentKind::BlinkTriple {
            synth.set_intent(IntentKind::None);
        }
        let n = STREAM_BLOCK.min(total - produced).min(if produced < intent_samples {
            intent_samples - produced
        } else {
            usize::MAX
        });
        let block = synth.next_block(n);
        produced += n;
        for (_, cmd) in decoder.push(&block, moving)? {
            if let Some(c) = cmd {
                return Ok(Some((c.kind, c.source, c.issued_at)));
            }
        }
    }
    Ok(None)
}

/// 20 LEFT, 20 RIGHT and 12 triple-blink trials through the online decoder.
///
/// Blink trials alternate GO and STOP against the chair's motion state,
/// which advances only on a successful gesture. Gesture detection does not
/// depend on that state, so trials run independently and the toggle is
/// resolved afterwards.
pub fn run_online_test(
    model: &TrainedModel,
    profile: &SubjectProfile,
    seed: u64,
    exec: Execution,
) -> Result<OnlineOutcome> {
    let model = Arc::new(model.clone());
    let mut plan: Vec<(TrialKind, IntentKind)> = Vec::new();
    plan.extend((0..ONLINE_TURN_TRIALS).map(|_| (TrialKind::Left, IntentKind::LedLeft13Hz)));
    plan.extend((0..ONLINE_TURN_TRIALS).map(|_| (TrialKind::Right, IntentKind::LedRight15Hz)));
    plan.extend((0..ONLINE_BLINK_TRIALS).map(|_| (TrialKind::GoStop, IntentKind::BlinkTriple)));
    let raw = exec.map_range(plan.len(), |i| {
        let p = profile.with_seed(derive_seed(seed, &[TAG_ONLINE, i as u64]));
        online_trial(&model, &p, plan[i].1, false)
    });
    let mut moving = false;
    let mut trials = Vec::with_capacity(plan.len());
    for ((kind, _), r) in plan.iter().zip(raw) {
        let first = r?;
        let latency = first.map(|(_, _, t)| t);
        let (intended, actual) = match kind {
            TrialKind::Left => (CommandKind::Left, first.map(|f| f.0)),
            TrialKind::Right => (CommandKind::Right, first.map(|f| f.0)),
            TrialKind::GoStop => {
                let intended = if moving { CommandKind::Stop } else { CommandKind::Go };
                let actual = first.map(|(k, src, _)| if src == CommandSource::Blink { intended } else { k });
                if actual == Some(intended) {
                    moving = !moving;
                }
                (intended, actual)
            }
        };
        trials.push(TrialOutcome { kind: *kind, intended, actual, latency });
    }
    Ok(OnlineOutcome { trials })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectResult {
    pub id: String,
    pub ssvep_amp: f64,
    pub noise_amp: f64,
    pub hyper: Hyperparams,
    /// Percent.
    pub cv_accuracy: f64,
    /// Percent.
    pub test_accuracy: f64,
    pub counts: OnlineCounts,
    /// Percent.
    pub success_rate: f64,
    /// Bits per minute.
    pub itr: f64,
}

/// Calibrate and fit one subject's model.
pub fn train_subject(
    profile: &SubjectProfile,
    seed: u64,
    bayes: &BayesConfig,
    exec: Execution,
) -> Result<(TrainedModel, FitReport)> {
    let calib = run_calibration(profile, seed, exec)?;
    fit_pipeline(&calib, derive_seed(seed, &[TAG_FIT]), bayes, exec)
}

/// Held-out accuracy and online outcome of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectEvaluation {
    /// Window accuracy on the held-out session, in [0, 1].
    pub test_accuracy: f64,
    pub online: OnlineOutcome,
}

pub fn evaluate_subject(
    model: &TrainedModel,
    profile: &SubjectProfile,
    seed: u64,
    exec: Execution,
) -> Result<SubjectEvaluation> {
    let test = run_test_session(profile, seed, exec)?;
    let test_accuracy = window_accuracy(model, &test)?;
    let online = run_online_test(model, profile, seed, exec)?;
    Ok(SubjectEvaluation { test_accuracy, online })
}

impl SubjectResult {
    pub fn new(profile: &SubjectProfile, fit: &FitReport, eval: &SubjectEvaluation) -> Self {
        let counts = eval.online.counts();
        let sr = counts.success_rate();
        Self {
            id: profile.id.clone(),
            ssvep_amp: profile.ssvep_amp[0],
            noise_amp: profile.noise_amp,
            hyper: fit.hyper,
            cv_accuracy: 100.0 * fit.cv_accuracy,
            test_accuracy: 100.0 * eval.test_accuracy,
            counts,
            success_rate: sr,
            itr: itr_or_zero(ITR_CLASSES, sr / 100.0, COMMAND_TIME_S),
        }
    }
}

/// Calibrate, fit, test and run the online protocol for one subject.
pub fn run_subject(
    profile: &SubjectProfile,
    seed: u64,
    bayes: &BayesConfig,
    exec: Execution,
) -> Result<(SubjectResult, TrainedModel)> {
    let (model, fit) = train_subject(profile, seed, bayes, exec)?;
    let eval = evaluate_subject(&model, profile, seed, exec)?;
    Ok((SubjectResult::new(profile, &fit, &eval), model))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub seed: u64,
    /// SSVEP fundamental per subject, µV. One subject per entry.
    pub amplitudes: Vec<f64>,
    pub noise_amp: f64,
    pub bayes: BayesConfig,
}

/// Default background level of synthetic subjects, µV RMS.
pub const COHORT_NOISE_UV: f64 = 10.0;
/// SSVEP SNR range of the default cohort, dB. Places the cohort mean test
/// accuracy in the mid 80s with a spread of about ten points.
pub const DEFAULT_SNR_DB: (f64, f64) = (-21.0, -15.0);
pub const DEFAULT_SUBJECTS: usize = 12;

/// `n` fundamentals spaced evenly in dB between `lo_db` and `hi_db` SSVEP
/// SNR, at `noise` µV background.
pub fn snr_sweep(n: usize, lo_db: f64, hi_db: f64, noise: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let frac = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            noise * 10f64.powf((lo_db + frac * (hi_db - lo_db)) / 20.0)
        })
        .collect()
}

impl CohortConfig {
    pub fn new(subjects: usize, seed: u64, lo_db: f64, hi_db: f64) -> Self {
        Self {
            seed,
            amplitudes: snr_sweep(subjects, lo_db, hi_db, COHORT_NOISE_UV),
            noise_amp: COHORT_NOISE_UV,
            bayes: BayesConfig::default(),
        }
    }

    pub fn profiles(&self) -> Vec<SubjectProfile> {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                SubjectProfile::new(format!("S{:02}", i + 1), a, self.noise_amp, derive_seed(self.seed, &[0, i as u64]))
            })
            .collect()
    }
}

/// Subjects run concurrently; results come back in subject order.
pub fn run_cohort(config: &CohortConfig, exec: Execution) -> Result<Vec<SubjectResult>> {
    let profiles = config.profiles();
    exec.map(&profiles, |p| run_subject(p, p.seed, &config.bayes, exec).map(|r| r.0)).into_iter().collect()
}
