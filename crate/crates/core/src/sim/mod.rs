//! Planar wheelchair simulation: kinematics, three range sensors and the
//! latched proximity stop.

mod episode;
mod map;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use episode::{random_free_pose, run_episode, EpisodeConfig, EpisodeSummary, EPISODE_DT};
pub use map::{Point, Polygon, Rect, WorldMap};

use crate::error::{Error, Result};

/// Wrap to `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `(−π, π]`, counter-clockwise from +x.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading) }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Motion {
    Stopped,
    Forward,
    TurningLeft,
    TurningRight,
    ForceStopped,
}

impl Motion {
    pub fn as_str(self) -> &'static str {
        match self {
            Motion::Stopped => "STOPPED",
            Motion::Forward => "FORWARD",
            Motion::TurningLeft => "TURNING_LEFT",
            Motion::TurningRight => "TURNING_RIGHT",
            Motion::ForceStopped => "FORCE_STOPPED",
        }
    }

    pub fn is_moving(self) -> bool {
        matches!(self, Motion::Forward | Motion::TurningLeft | Motion::TurningRight)
    }
}

impl fmt::Display for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The chair's command vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CommandKind {
    Left,
    Right,
    Go,
    Stop,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Left => "LEFT",
            CommandKind::Right => "RIGHT",
            CommandKind::Go => "GO",
            CommandKind::Stop => "STOP",
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LEFT" => Ok(CommandKind::Left),
            "RIGHT" => Ok(CommandKind::Right),
            "GO" => Ok(CommandKind::Go),
            "STOP" => Ok(CommandKind::Stop),
            _ => Err(Error::InvalidArgument(format!("unknown command `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorReadings {
    pub front: f64,
    pub left: f64,
    pub right: f64,
}

impl SensorReadings {
    pub fn min(&self) -> f64 {
        self.front.min(self.left).min(self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Forward speed, m/s.
    pub speed: f64,
    /// Turn rate, degrees per second.
    pub turn_rate_deg: f64,
    /// In-place turn per LEFT/RIGHT, degrees, at most 60.
    pub turn_angle_deg: f64,
    pub stop_distance: f64,
    pub min_range: f64,
    pub max_range: f64,
    pub cone_deg: f64,
    pub rays: usize,
    /// Side sensor offset from the heading, degrees.
    pub side_angle_deg: f64,
    pub sensor_noise: f64,
    pub noise_free: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            speed: 0.4,
            turn_rate_deg: 30.0,
            turn_angle_deg: 60.0,
            stop_distance: 0.5,
            min_range: 0.02,
            max_range: 4.0,
            cone_deg: 30.0,
            rays: 15,
            side_angle_deg: 30.0,
            sensor_noise: 0.01,
            noise_free: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.speed > 0.0
            && self.turn_rate_deg > 0.0
            && self.turn_angle_deg > 0.0
            && self.turn_angle_deg <= 60.0
            && self.min_range > 0.0
            && self.max_range > self.min_range
            && self.rays >= 1
            && self.sensor_noise >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("simulator configuration out of range".into()))
        }
    }

    /// Seconds taken by one commanded turn.
    pub fn turn_duration(&self) -> f64 {
        self.turn_angle_deg / self.turn_rate_deg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChairState {
    pub pose: Pose,
    pub motion: Motion,
    pub force_latched: bool,
    pub sensors: SensorReadings,
    /// Heading change still owed by the current turn, radians.
    pub turn_remaining: f64,
    /// Simulation time, s.
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SimEvent {
    ForceStop { t: f64, sensors: SensorReadings, pose: Pose },
    TurnComplete { t: f64, heading: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandOutcome {
    pub accepted: bool,
    pub motion: Motion,
}

/// A chair in a map. Single owner of all physical state.
#[derive(Clone, Debug)]
pub struct World {
    map: WorldMap,
    config: SimConfig,
    state: ChairState,
    rng: ChaCha8Rng,
}

impl World {
    pub fn new(map: WorldMap, config: SimConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let pose = map.start;
        let far = SensorReadings { front: config.max_range, left: config.max_range, right: config.max_range };
        let mut w = Self {
            map,
            config,
            state: ChairState {
                pose,
                motion: Motion::Stopped,
                force_latched: false,
                sensors: far,
                turn_remaining: 0.0,
                time: 0.0,
            },
            rng,
        };
        w.state.sensors = w.sense_now();
        Ok(w)
    }

    pub fn state(&self) -> &ChairState {
        &self.state
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn sense_now(&mut self) -> SensorReadings {
        let noise = if self.config.noise_free { None } else { Some(&mut self.rng) };
        sense(&self.state.pose, &self.map, &self.config, noise)
    }

    /// Apply a command. While latched only GO is accepted; it clears the
    /// latch and starts forward motion.
    pub fn apply_command(&mut self, cmd: CommandKind) -> CommandOutcome {
        let s = &mut self.state;
        if s.force_latched && cmd != CommandKind::Go {
            tracing::debug!(%cmd, "ignored while force-stopped");
            return CommandOutcome { accepted: false, motion: s.motion };
        }
        s.force_latched = false;
        s.turn_remaining = 0.0;
        s.motion = match cmd {
            CommandKind::Go => Motion::Forward,
            CommandKind::Stop => Motion::Stopped,
            CommandKind::Left | CommandKind::Right => {
                s.turn_remaining = self.config.turn_angle_deg.to_radians();
                if cmd == CommandKind::Left {
                    Motion::TurningLeft
                } else {
                    Motion::TurningRight
                }
            }
        };
        CommandOutcome { accepted: true, motion: s.motion }
    }

    fn force_stop(&mut self, events: &mut Vec<SimEvent>) {
        let s = &mut self.state;
        s.motion = Motion::ForceStopped;
        s.force_latched = true;
        s.turn_remaining = 0.0;
        events.push(SimEvent::ForceStop { t: s.time, sensors: s.sensors, pose: s.pose });
    }

    fn too_close(&self) -> bool {
        self.state.sensors.min() < self.config.stop_distance
    }

    /// Advance by `dt` seconds, `0 < dt ≤ 0.1`. The proximity check runs
    /// before and after integration, so the chair never moves while a sensor
    /// reads under the stop distance.
    pub fn tick(&mut self, dt: f64) -> Result<Vec<SimEvent>> {
        if !(dt > 0.0 && dt <= 0.1) {
            return Err(Error::InvalidArgument(format!("tick dt {dt} outside (0, 0.1]")));
        }
        let mut events = Vec::new();
        if self.state.motion.is_moving() && self.too_close() {
            self.force_stop(&mut events);
        }
        let cfg = &self.config;
        let s = &mut self.state;
        match s.motion {
            Motion::Forward => {
                let step = cfg.speed * dt;
                let p = s.pose;
                let blocked = self.map.cast(p.position(), p.heading).is_some_and(|d| d <= step);
                if !blocked {
                    s.pose.x += step * p.heading.cos();
                    s.pose.y += step * p.heading.sin();
                }
            }
            Motion::TurningLeft | Motion::TurningRight => {
                let turn = (cfg.turn_rate_deg.to_radians() * dt).min(s.turn_remaining);
                let sign = if s.motion == Motion::TurningLeft { 1.0 } else { -1.0 };
                s.pose.heading = normalize_angle(s.pose.heading + sign * turn);
                s.turn_remaining -= turn;
                if s.turn_remaining <= 1e-12 {
                    s.turn_remaining = 0.0;
                    s.motion = Motion::Stopped;
                    events.push(SimEvent::TurnComplete { t: s.time + dt, heading: s.pose.heading });
                }
            }
            Motion::Stopped | Motion::ForceStopped => {}
        }
        self.state.time += dt;
        self.state.sensors = self.sense_now();
        if self.state.motion.is_moving() && self.too_close() {
            self.force_stop(&mut events);
        }
        Ok(events)
    }
}

/// Front, left and right ranges at `pose`. Each sensor takes the minimum
/// over an evenly sampled cone; hits are clamped to the sensor range and
/// misses read `max_range`.
pub fn sense(pose: &Pose, map: &WorldMap, cfg: &SimConfig, mut noise: Option<&mut ChaCha8Rng>) -> SensorReadings {
    let side = cfg.side_angle_deg.to_radians();
    let mut read = |offset: f64| {
        let centre = pose.heading + offset;
        let half = cfg.cone_deg.to_radians() / 2.0;
        let mut best: Option<f64> = None;
        for k in 0..cfg.rays {
            let frac = if cfg.rays == 1 { 0.5 } else { k as f64 / (cfg.rays - 1) as f64 };
            let theta = centre - half + frac * 2.0 * half;
            if let Some(d) = map.cast(pose.position(), theta) {
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        match best {
            Some(d) if d < cfg.max_range => {
                let n = match noise.as_deref_mut() {
                    Some(rng) if cfg.sensor_noise > 0.0 => {
                        Normal::new(0.0, cfg.sensor_noise).expect("positive sigma").sample(rng)
                    }
                    _ => 0.0,
                };
                (d + n).clamp(cfg.min_range, cfg.max_range)
            }
            _ => cfg.max_range,
        }
    };
    SensorReadings { front: read(0.0), left: read(side), right: read(-side) }
}
