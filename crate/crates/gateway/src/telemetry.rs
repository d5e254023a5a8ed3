//! Wire schema of the telemetry stream and its broadcast fan-out.
//!
//! Messages travel on two lanes. Alarms, commands and decisions use the
//! critical lane; eeg, pose and sensor messages use the bulk lane. Each lane
//! is a bounded broadcast ring: a subscriber that falls behind loses its
//! oldest messages and the publisher never waits. Subscribers drain the
//! critical lane first, so an alarm is never queued behind eeg blocks. Every
//! message type lives on exactly one lane, so per-type order is preserved.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chair_core::sim::{CommandKind, Motion, Pose, SensorReadings};
use chair_core::svm::SsvepClass;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::{self, error::RecvError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Ssvep,
    Blink,
    Manual,
}

/// One telemetry message. `ts_ms` is session time in milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Telemetry {
    /// Decimated EEG block, channel-major; `t0_ms` stamps the first sample.
    Eeg {
        ts_ms: u64,
        channels: Vec<String>,
        fs: f64,
        t0_ms: u64,
        samples: Vec<Vec<f64>>,
    },
    /// One classifier decision per hop.
    Decision {
        ts_ms: u64,
        ssvep_class: SsvepClass,
        votes: Vec<u32>,
        blink_gesture: bool,
    },
    /// A command applied to the chair and its result.
    Command {
        ts_ms: u64,
        cmd: CommandKind,
        source: Source,
        accepted: bool,
        state: Motion,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<i64>,
    },
    Pose {
        ts_ms: u64,
        x: f64,
        y: f64,
        heading: f64,
        motion: Motion,
    },
    Sensor {
        ts_ms: u64,
        front: f64,
        left: f64,
        right: f64,
    },
    /// Proximity force-stop.
    Alarm {
        ts_ms: u64,
        reason: String,
        sensors: SensorReadings,
        pose: Pose,
    },
}

impl Telemetry {
    pub fn ts_ms(&self) -> u64 {
        match self {
            Telemetry::Eeg { ts_ms, .. }
            | Telemetry::Decision { ts_ms, .. }
            | Telemetry::Command { ts_ms, .. }
            | Telemetry::Pose { ts_ms, .. }
            | Telemetry::Sensor { ts_ms, .. }
            | Telemetry::Alarm { ts_ms, .. } => *ts_ms,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Telemetry::Eeg { .. } => "eeg",
            Telemetry::Decision { .. } => "decision",
            Telemetry::Command { .. } => "command",
            Telemetry::Pose { .. } => "pose",
            Telemetry::Sensor { .. } => "sensor",
            Telemetry::Alarm { .. } => "alarm",
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(self, Telemetry::Alarm { .. } | Telemetry::Command { .. } | Telemetry::Decision { .. })
    }
}

/// Serialized once, shared by every subscriber.
pub type Frame = Arc<str>;

#[derive(Clone, Debug)]
pub struct Hub {
    critical: broadcast::Sender<Frame>,
    bulk: broadcast::Sender<Frame>,
    dropped: Arc<AtomicU64>,
}

impl Hub {
    pub fn new(critical_capacity: usize, bulk_capacity: usize) -> Self {
        Self {
            critical: broadcast::channel(critical_capacity.max(1)).0,
            bulk: broadcast::channel(bulk_capacity.max(1)).0,
            dropped: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Never blocks. Messages with no subscriber are discarded.
    pub fn publish(&self, msgs: &[Telemetry]) {
        for m in msgs {
            let frame: Frame = serde_json::to_string(m).expect("telemetry serializes").into();
            let lane = if m.is_critical() { &self.critical } else { &self.bulk };
            let _ = lane.send(frame);
        }
    }

    pub fn subscribe(&self) -> Subscriber {
        Subscriber { critical: self.critical.subscribe(), bulk: self.bulk.subscribe(), dropped: self.dropped.clone() }
    }

    pub fn subscribers(&self) -> usize {
        self.critical.receiver_count()
    }

    /// Messages lost to slow subscribers since start, summed over subscribers.
    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

pub struct Subscriber {
    critical: broadcast::Receiver<Frame>,
    bulk: broadcast::Receiver<Frame>,
    dropped: Arc<AtomicU64>,
}

impl Subscriber {
    /// Next frame, critical lane first. `None` once the hub is gone.
    pub async fn next(&mut self) -> Option<Frame> {
        loop {
            let r = tokio::select! {
                biased;
                r = self.critical.recv() => r,
                r = self.bulk.recv() => r,
            };
            match r {
                Ok(f) => return Some(f),
                Err(RecvError::Lagged(n)) => {
                    self.dropped.fetch_add(n, Ordering::Relaxed);
                }
                Err(RecvError::Closed) => return None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(ts: u64) -> Telemetry {
        Telemetry::Pose { ts_ms: ts, x: 0.0, y: 0.0, heading: 0.0, motion: Motion::Stopped }
    }

    fn alarm(ts: u64) -> Telemetry {
        let sensors = SensorReadings { front: 0.4, left: 1.0, right: 1.0 };
        Telemetry::Alarm { ts_ms: ts, reason: "FORCE_STOP".into(), sensors, pose: Pose::default() }
    }

    #[test]
    fn wire_shape() {
        let v: serde_json::Value = serde_json::to_value(alarm(7)).unwrap();
        assert_eq!(v["type"], "alarm");
        assert_eq!(v["ts_ms"], 7);
        assert_eq!(v["sensors"]["front"], 0.4);
        let c = Telemetry::Command {
            ts_ms: 1,
            cmd: CommandKind::Go,
            source: Source::Blink,
            accepted: true,
            state: Motion::Forward,
            seq: None,
        };
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["cmd"], "GO");
        assert_eq!(v["source"], "BLINK");
        assert_eq!(v["state"], "FORWARD");
        assert!(v.get("seq").is_none());
        let back: Telemetry = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[tokio::test]
    async fn alarm_overtakes_queued_bulk_and_lag_drops_oldest() {
        let hub = Hub::new(8, 4);
        let mut sub = hub.subscribe();
        hub.publish(&(0..10).map(pose).collect::<Vec<_>>());
        hub.publish(&[alarm(99)]);
        let first: serde_json::Value = serde_json::from_str(&sub.next().await.unwrap()).unwrap();
        assert_eq!(first["type"], "alarm");
        let mut ts = Vec::new();
        for _ in 0..4 {
            let v: serde_json::Value = serde_json::from_str(&sub.next().await.unwrap()).unwrap();
            ts.push(v["ts_ms"].as_u64().unwrap());
        }
        assert_eq!(ts, [6, 7, 8, 9]);
        assert_eq!(hub.dropped(), 6);
    }
}
