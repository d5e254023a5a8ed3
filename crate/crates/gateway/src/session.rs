//! One closed-loop session: synthesizer, decoder and world advanced together
//! on a single logical clock.
//!
//! Every external input is stamped with the tick it was applied before, so a
//! recording replays to the same trajectory: the synthesizer, decoder and
//! world are all deterministic given the session seed and the input log.

use std::collections::VecDeque;
use std::sync::Arc;

use chair_core::decoder::{CommandSource, Decoder, DecoderConfig};
use chair_core::experiment::derive_seed;
use chair_core::sim::{
    CommandKind, CommandOutcome, Motion, Pose, SensorReadings, SimConfig, SimEvent, World, WorldMap, EPISODE_DT,
};
use chair_core::svm::TrainedModel;
use chair_core::synth::{IntentKind, SubjectProfile, Synthesizer, GESTURE_WINDOW_S};
use chair_core::{Channel, Execution};
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::decimate::Decimator;
use crate::error::{GatewayError, Result};
use crate::telemetry::{Source, Telemetry};

/// Physics step, s.
pub const TICK_S: f64 = EPISODE_DT;
/// Pose, sensor and eeg messages go out every this many ticks (10 Hz).
pub const TELEMETRY_EVERY_TICKS: u64 = 2;
/// EEG rate reduction for transport.
pub const EEG_DECIMATION: usize = 4;

const TAG_SYNTH: u64 = 0x7379_6e74;
const TAG_SIM: u64 = 0x7369_6d75;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    #[default]
    LiveSim,
    Replay,
}

/// What the simulated user is attending to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntentTarget {
    LedLeft,
    LedRight,
    #[default]
    None,
    /// One triple-blink gesture; reverts to `None` after the gesture window.
    Blink3,
}

impl IntentTarget {
    fn kind(self) -> IntentKind {
        match self {
            IntentTarget::LedLeft => IntentKind::LedLeft13Hz,
            IntentTarget::LedRight => IntentKind::LedRight15Hz,
            IntentTarget::None => IntentKind::None,
            IntentTarget::Blink3 => IntentKind::BlinkTriple,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub profile: String,
    pub map: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub noise_free_sensors: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "input", rename_all = "lowercase")]
pub enum Input {
    Intent {
        target: IntentTarget,
    },
    Command {
        cmd: CommandKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<i64>,
    },
}

/// An input applied just before tick `tick` ran.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedInput {
    pub tick: u64,
    #[serde(flatten)]
    pub input: Input,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub config: SessionConfig,
    pub inputs: Vec<RecordedInput>,
}

/// Immutable view of the chair published after every tick and input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub ts_ms: u64,
    pub tick: u64,
    pub pose: Pose,
    pub motion: Motion,
    pub sensors: SensorReadings,
    pub force_latched: bool,
    pub intent: IntentTarget,
    pub mode: Mode,
}

fn ms(t: f64) -> u64 {
    (t * 1000.0).round().max(0.0) as u64
}

pub struct Session {
    config: SessionConfig,
    synth: Synthesizer,
    decoder: Decoder,
    world: World,
    decimator: Decimator,
    eeg_buf: Vec<Vec<f64>>,
    eeg_sent: u64,
    samples_per_tick: usize,
    tick: u64,
    intent: IntentTarget,
    revert_at: Option<u64>,
    /// An SSVEP turn is executing; the decoder is released when it ends.
    ssvep_hold: bool,
    recording: Recording,
    script: VecDeque<RecordedInput>,
}

impl Session {
    /// Build from parts. `profile`'s seed is replaced by one derived from the
    /// session seed.
    pub fn with_parts(
        config: SessionConfig,
        profile: &SubjectProfile,
        map: WorldMap,
        model: Arc<TrainedModel>,
    ) -> Result<Self> {
        let synth = Synthesizer::new(&profile.with_seed(derive_seed(config.seed, &[TAG_SYNTH])))?;
        let fs = synth.fs();
        let decoder = Decoder::new(model, fs, DecoderConfig::default(), Execution::default());
        let sim = SimConfig {
            noise_free: config.noise_free_sensors,
            seed: derive_seed(config.seed, &[TAG_SIM]),
            ..SimConfig::default()
        };
        let world = World::new(map, sim)?;
        let channels = Channel::ALL.len();
        Ok(Self {
            recording: Recording { config: SessionConfig { mode: Mode::LiveSim, ..config.clone() }, inputs: vec![] },
            config,
            synth,
            decoder,
            world,
            decimator: Decimator::new(channels, EEG_DECIMATION),
            eeg_buf: vec![Vec::new(); channels],
            eeg_sent: 0,
            samples_per_tick: (fs * TICK_S).round() as usize,
            tick: 0,
            intent: IntentTarget::None,
            revert_at: None,
            ssvep_hold: false,
            script: VecDeque::new(),
        })
    }

    /// A live session resolved against `catalog`.
    pub fn live(config: SessionConfig, catalog: &Catalog) -> Result<Self> {
        let profile = catalog.profile(&config.profile)?;
        let map = catalog.map(&config.map)?.clone();
        let model = catalog.model(&config.profile, config.seed)?;
        Self::with_parts(SessionConfig { mode: Mode::LiveSim, ..config }, profile, map, model)
    }

    /// A session that re-applies `recording`'s inputs at their ticks and
    /// accepts no others.
    pub fn replay(recording: Recording, catalog: &Catalog) -> Result<Self> {
        let mut s = Self::live(recording.config.clone(), catalog)?;
        s.config.mode = Mode::Replay;
        let mut inputs = recording.inputs;
        inputs.sort_by_key(|r| r.tick);
        s.script = inputs.into();
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.world.state().time
    }

    pub fn intent(&self) -> IntentTarget {
        self.intent
    }

    pub fn recording(&self) -> &Recording {
        &self.recording
    }

    /// Replay inputs not yet applied.
    pub fn pending_inputs(&self) -> usize {
        self.script.len()
    }

    pub fn snapshot(&self) -> Snapshot {
        let s = self.world.state();
        Snapshot {
            ts_ms: ms(s.time),
            tick: self.tick,
            pose: s.pose,
            motion: s.motion,
            sensors: s.sensors,
            force_latched: s.force_latched,
            intent: self.intent,
            mode: self.config.mode,
        }
    }

    /// Manual command from a client.
    pub fn command(&mut self, cmd: CommandKind, seq: Option<i64>) -> Result<(CommandOutcome, Vec<Telemetry>)> {
        self.require_live()?;
        let mut out = Vec::new();
        let outcome = self.apply(Input::Command { cmd, seq }, &mut out).expect("command inputs yield an outcome");
        Ok((outcome, out))
    }

    /// Switch what the simulated user attends to, from the next sample.
    pub fn set_intent(&mut self, target: IntentTarget) -> Result<()> {
        self.require_live()?;
        self.apply(Input::Intent { target }, &mut Vec::new());
        Ok(())
    }

    fn require_live(&self) -> Result<()> {
        match self.config.mode {
            Mode::LiveSim => Ok(()),
            Mode::Replay => Err(GatewayError::Replaying),
        }
    }

    fn apply(&mut self, input: Input, out: &mut Vec<Telemetry>) -> Option<CommandOutcome> {
        self.recording.inputs.push(RecordedInput { tick: self.tick, input });
        match input {
            Input::Intent { target } => {
                self.switch_intent(target);
                None
            }
            Input::Command { cmd, seq } => {
                let outcome = self.world.apply_command(cmd);
                out.push(self.command_msg(ms(self.time()), cmd, Source::Manual, outcome, seq));
                self.release_if_idle();
                Some(outcome)
            }
        }
    }

    fn switch_intent(&mut self, target: IntentTarget) {
        self.intent = target;
        self.synth.set_intent(target.kind());
        self.revert_at =
            (target == IntentTarget::Blink3).then(|| self.tick + (GESTURE_WINDOW_S / TICK_S).round() as u64);
    }

    fn command_msg(
        &self,
        ts_ms: u64,
        cmd: CommandKind,
        source: Source,
        outcome: CommandOutcome,
        seq: Option<i64>,
    ) -> Telemetry {
        Telemetry::Command { ts_ms, cmd, source, accepted: outcome.accepted, state: outcome.motion, seq }
    }

    fn release_if_idle(&mut self) {
        let turning = matches!(self.world.state().motion, Motion::TurningLeft | Motion::TurningRight);
        if self.ssvep_hold && !turning {
            self.ssvep_hold = false;
            self.decoder.action_complete();
        }
    }

    /// Advance one physics tick and return the telemetry it produced.
    pub fn step(&mut self) -> Result<Vec<Telemetry>> {
        let mut out = Vec::new();
        while self.script.front().is_some_and(|r| r.tick <= self.tick) {
            let r = self.script.pop_front().expect("front checked");
            self.apply(r.input, &mut out);
        }
        if self.revert_at == Some(self.tick) {
            self.switch_intent(IntentTarget::None);
        }

        let block = self.synth.next_block(self.samples_per_tick);
        for (buf, new) in self.eeg_buf.iter_mut().zip(self.decimator.push(block.data())) {
            buf.extend(new);
        }
        let moving = self.world.state().motion.is_moving();
        for (d, cmd) in self.decoder.push(&block, moving)? {
            let ts = ms(d.window_end);
            out.push(Telemetry::Decision {
                ts_ms: ts,
                ssvep_class: d.ssvep_class,
                votes: d.votes,
                blink_gesture: d.blink_gesture,
            });
            if let Some(c) = cmd {
                let outcome = self.world.apply_command(c.kind);
                let source = match c.source {
                    CommandSource::Ssvep => Source::Ssvep,
                    CommandSource::Blink => Source::Blink,
                };
                out.push(self.command_msg(ts, c.kind, source, outcome, None));
                if c.source == CommandSource::Ssvep {
                    self.ssvep_hold = true;
                }
            }
        }
        self.release_if_idle();

        for e in self.world.tick(TICK_S)? {
            if let SimEvent::ForceStop { t, sensors, pose } = e {
                out.push(Telemetry::Alarm { ts_ms: ms(t), reason: "FORCE_STOP".into(), sensors, pose });
            }
        }
        self.release_if_idle();
        self.tick += 1;

        if self.tick.is_multiple_of(TELEMETRY_EVERY_TICKS) {
            let s = self.world.state();
            let ts_ms = ms(s.time);
            out.push(Telemetry::Pose { ts_ms, x: s.pose.x, y: s.pose.y, heading: s.pose.heading, motion: s.motion });
            out.push(Telemetry::Sensor { ts_ms, front: s.sensors.front, left: s.sensors.left, right: s.sensors.right });
            let n = self.eeg_buf[0].len() as u64;
            if n > 0 {
                let fs = self.synth.fs() / EEG_DECIMATION as f64;
                let samples = self.eeg_buf.iter_mut().map(std::mem::take).collect();
                out.push(Telemetry::Eeg {
                    ts_ms,
                    channels: Channel::ALL.iter().map(|c| c.label().to_string()).collect(),
                    fs,
                    t0_ms: ms(self.eeg_sent as f64 / fs),
                    samples,
                });
                self.eeg_sent += n;
            }
        }
        Ok(out)
    }
}
