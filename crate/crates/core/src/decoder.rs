//! Online decoding: sliding windows over the live stream, SSVEP
//! classification and blink-gesture detection on each window, and debounced
//! command emission.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blink::{bandpass, is_triple_blink, BlinkDetector, BlinkEvent, BAND_HI_HZ, BAND_LO_HZ};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::{FeatureExtractor, FeatureVector};
use crate::signal::{Channel, EegSegment};
use crate::sim::CommandKind;
use crate::svm::{SsvepClass, TrainedModel};
use crate::synth::GESTURE_WINDOW_S;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CommandSource {
    Ssvep,
    Blink,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub kind: CommandKind,
    pub issued_at: f64,
    pub source: CommandSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub window_end: f64,
    pub ssvep_class: SsvepClass,
    /// Votes per class in `SsvepClass::ALL` order.
    pub votes: Vec<u32>,
    pub blink_gesture: bool,
    pub blink_events: Vec<BlinkEvent>,
    pub features: FeatureVector,
}

/// Fires a class after `required` consecutive agreeing decisions, then holds
/// until [`Debouncer::release`].
#[derive(Clone, Debug)]
pub struct Debouncer {
    required: usize,
    last: Option<SsvepClass>,
    streak: usize,
    holding: bool,
}

impl Debouncer {
    pub fn new(required: usize) -> Self {
        Self { required: required.max(1), last: None, streak: 0, holding: false }
    }

    pub fn is_holding(&self) -> bool {
        self.holding
    }

    /// Feed one decision; returns the class to act on, if any. BASELINE
    /// never fires.
    pub fn push(&mut self, class: SsvepClass) -> Option<SsvepClass> {
        if self.holding {
            return None;
        }
        if self.last == Some(class) {
            self.streak += 1;
        } else {
            self.last = Some(class);
            self.streak = 1;
        }
        if class != SsvepClass::Baseline && self.streak >= self.required {
            self.hold();
            return Some(class);
        }
        None
    }

    /// Enter the refractory hold and forget the current streak.
    pub fn hold(&mut self) {
        self.holding = true;
        self.reset();
    }

    /// The commanded action has completed.
    pub fn release(&mut self) {
        self.holding = false;
        self.reset();
    }

    pub fn reset(&mut self) {
        self.last = None;
        self.streak = 0;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub debounce: usize,
    pub gesture_window_s: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { window_s: 4.0, hop_s: 1.0, debounce: 2, gesture_window_s: GESTURE_WINDOW_S }
    }
}

/// Single-writer decoder state for one session.
#[derive(Clone, Debug)]
pub struct Decoder {
    config: DecoderConfig,
    model: Arc<TrainedModel>,
    extractor: FeatureExtractor,
    blink: BlinkDetector,
    debouncer: Debouncer,
    exec: Execution,
    buffer: Option<EegSegment>,
    /// Absolute index of the buffer's first sample.
    buffer_start: usize,
    seen: usize,
    next_end: usize,
    /// Latest blink already spent on a gesture.
    consumed_blink_t: f64,
}

impl Decoder {
    pub fn new(model: Arc<TrainedModel>, fs: f64, config: DecoderConfig, exec: Execution) -> Self {
        let extractor = FeatureExtractor::cached(fs, config.window_s);
        let next_end = extractor.window_len();
        Self {
            debouncer: Debouncer::new(config.debounce),
            config,
            model,
            extractor,
            blink: BlinkDetector::default(),
            exec,
            buffer: None,
            buffer_start: 0,
            seen: 0,
            next_end,
            consumed_blink_t: f64::NEG_INFINITY,
        }
    }

    pub fn with_blink_detector(mut self, blink: BlinkDetector) -> Self {
        self.blink = blink;
        self
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn debouncer(&self) -> &Debouncer {
        &self.debouncer
    }

    /// The action behind the last SSVEP command has finished.
    pub fn action_complete(&mut self) {
        self.debouncer.release();
    }

    /// Classify one window. `moving` is the chair's current motion state and
    /// selects STOP or GO for a blink gesture.
    pub fn step(&mut self, window: &EegSegment, moving: bool) -> Result<(Decision, Option<Command>)> {
        let need = self.extractor.window_len();
        if window.len() < need {
            return Err(Error::BufferUnderrun { have: window.duration(), need: self.config.window_s });
        }
        let window = if window.len() > need { window.slice(window.len() - need, need)? } else { window.clone() };
        let occipital = window.select(&Channel::OCCIPITAL)?;
        let frontal = window.select(&Channel::FRONTAL)?;
        let (ssvep, blinks) = self.exec.join(
            || -> Result<_> {
                let f = self.extractor.extract(&occipital, self.exec)?;
                let p = self.model.predict(f.values())?;
                Ok((f, p))
            },
            || -> Result<Vec<BlinkEvent>> { self.blink.detect(&bandpass(&frontal, BAND_LO_HZ, BAND_HI_HZ)?) },
        );
        let (features, pred) = ssvep?;
        let blink_events = blinks?;
        let fresh: Vec<BlinkEvent> = blink_events.iter().filter(|e| e.t > self.consumed_blink_t).cloned().collect();
        let gesture = is_triple_blink(&blink_events, self.config.gesture_window_s) && fresh.len() == 3;
        let votes = SsvepClass::ALL
            .iter()
            .map(|c| self.model.classes.iter().position(|m| m == c).map_or(0, |i| pred.votes[i]))
            .collect();
        let window_end = window.t_end();
        let decision =
            Decision { window_end, ssvep_class: pred.class, votes, blink_gesture: gesture, blink_events, features };
        let command = if gesture {
            self.consumed_blink_t = fresh.iter().map(|e| e.t).fold(f64::NEG_INFINITY, f64::max);
            self.debouncer.reset();
            Some(Command {
                kind: if moving { CommandKind::Stop } else { CommandKind::Go },
                issued_at: window_end,
                source: CommandSource::Blink,
            })
        } else {
            self.debouncer.push(pred.class).and_then(|c| {
                let kind = match c {
                    SsvepClass::Left13 => CommandKind::Left,
                    SsvepClass::Right15 => CommandKind::Right,
                    SsvepClass::Baseline => return None,
                };
                Some(Command { kind, issued_at: window_end, source: CommandSource::Ssvep })
            })
        };
        Ok((decision, command))
    }

    /// Append streamed samples and run every window whose end has been
    /// reached, one per hop.
    pub fn push(&mut self, block: &EegSegment, moving: bool) -> Result<Vec<(Decision, Option<Command>)>> {
        match &mut self.buffer {
            Some(b) => b.append(block)?,
            None => self.buffer = Some(block.clone()),
        }
        self.seen += block.len();
        let win = self.extractor.window_len();
        let hop = (self.config.hop_s * self.extractor.fs()).round() as usize;
        let mut out = Vec::new();
        while self.seen >= self.next_end {
            let buf = self.buffer.as_ref().expect("buffer filled above");
            let window = buf.slice(self.next_end - win - self.buffer_start, win)?;
            out.push(self.step(&window, moving)?);
            self.next_end += hop;
        }
        if let Some(buf) = &mut self.buffer {
            let keep_from = self.next_end.saturating_sub(win).max(self.buffer_start);
            let keep = self.seen - keep_from;
            buf.truncate_front(keep);
            self.buffer_start = keep_from;
        }
        Ok(out)
    }
}
