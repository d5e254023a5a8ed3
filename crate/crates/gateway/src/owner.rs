//! The session owner: a dedicated thread that holds the [`Session`], runs
//! its ticks on a wall-clock schedule and serializes every mutation.
//!
//! Telemetry publishing never waits on subscribers and snapshots go out
//! through a watch channel, so no client can stall the physics clock.

use std::sync::mpsc::{self, RecvTimeoutError, TryRecvError};
use std::thread;
use std::time::{Duration, Instant};

use chair_core::sim::{CommandKind, CommandOutcome};
use serde::{Deserialize, Serialize};
use tokio::sync::{oneshot, watch};

use crate::error::{GatewayError, Result};
use crate::session::{IntentTarget, Mode, Recording, Session, SessionConfig, Snapshot, TICK_S};
use crate::telemetry::Hub;

/// Falling further behind than this drops the backlog instead of bursting.
const MAX_BACKLOG: Duration = Duration::from_secs(1);

/// Wall-clock tick timing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TickStats {
    pub ticks: u64,
    /// Scheduled wall time per tick, ms.
    pub period_ms: f64,
    pub mean_interval_ms: f64,
    /// Mean |interval − period| / period.
    pub jitter: f64,
    /// Worst delay of a tick behind its schedule, ms.
    pub max_late_ms: f64,
    pub resyncs: u64,
}

#[derive(Default)]
struct StatsAcc {
    last: Option<Instant>,
    intervals: u64,
    sum_interval: f64,
    sum_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub config: SessionConfig,
    pub mode: Mode,
    pub time_scale: f64,
    pub tick: u64,
    pub ts_ms: u64,
    pub inputs_recorded: usize,
    /// Replay inputs still to come; 0 for live sessions.
    pub inputs_pending: usize,
    pub stats: TickStats,
}

enum Request {
    Command { cmd: CommandKind, seq: Option<i64>, reply: oneshot::Sender<Result<CommandOutcome>> },
    Intent { target: IntentTarget, reply: oneshot::Sender<Result<()>> },
    Recording { reply: oneshot::Sender<Recording> },
    Info { reply: oneshot::Sender<SessionInfo> },
}

/// Client side of a running session. Dropping it stops the owner thread.
pub struct SessionHandle {
    tx: mpsc::Sender<Request>,
    snapshot: watch::Receiver<Snapshot>,
    config: SessionConfig,
}

impl SessionHandle {
    /// Start ticking `session` at `time_scale` simulated seconds per wall
    /// second, publishing telemetry to `hub`.
    pub fn spawn(session: Session, time_scale: f64, hub: Hub) -> Self {
        let (tx, rx) = mpsc::channel();
        let (snap_tx, snapshot) = watch::channel(session.snapshot());
        let config = session.config().clone();
        thread::Builder::new()
            .name("session-owner".into())
            .spawn(move || run(session, time_scale, hub, rx, snap_tx))
            .expect("spawn session owner");
        Self { tx, snapshot, config }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Latest published snapshot.
    pub fn snapshot(&self) -> Snapshot {
        self.snapshot.borrow().clone()
    }

    pub fn watch(&self) -> watch::Receiver<Snapshot> {
        self.snapshot.clone()
    }

    async fn call<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Request) -> Result<T> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).map_err(|_| GatewayError::SessionEnded)?;
        rx.await.map_err(|_| GatewayError::SessionEnded)
    }

    pub async fn command(&self, cmd: CommandKind, seq: Option<i64>) -> Result<CommandOutcome> {
        self.call(|reply| Request::Command { cmd, seq, reply }).await?
    }

    pub async fn intent(&self, target: IntentTarget) -> Result<()> {
        self.call(|reply| Request::Intent { target, reply }).await?
    }

    pub async fn recording(&self) -> Result<Recording> {
        self.call(|reply| Request::Recording { reply }).await
    }

    pub async fn info(&self) -> Result<SessionInfo> {
        self.call(|reply| Request::Info { reply }).await
    }
}

fn run(mut session: Session, time_scale: f64, hub: Hub, rx: mpsc::Receiver<Request>, snap: watch::Sender<Snapshot>) {
    let period = Duration::from_secs_f64(TICK_S / time_scale);
    let mut stats = TickStats { period_ms: period.as_secs_f64() * 1e3, ..Default::default() };
    let mut acc = StatsAcc::default();
    let mut next = Instant::now() + period;

    let handle = |session: &mut Session, stats: &TickStats, req: Request| match req {
        Request::Command { cmd, seq, reply } => {
            let r = session.command(cmd, seq).map(|(outcome, msgs)| {
                hub.publish(&msgs);
                snap.send_replace(session.snapshot());
                outcome
            });
            let _ = reply.send(r);
        }
        Request::Intent { target, reply } => {
            let r = session.set_intent(target);
            snap.send_replace(session.snapshot());
            let _ = reply.send(r);
        }
        Request::Recording { reply } => {
            let _ = reply.send(session.recording().clone());
        }
        Request::Info { reply } => {
            let _ = reply.send(SessionInfo {
                config: session.config().clone(),
                mode: session.mode(),
                time_scale,
                tick: session.tick(),
                ts_ms: session.snapshot().ts_ms,
                inputs_recorded: session.recording().inputs.len(),
                inputs_pending: session.pending_inputs(),
                stats: stats.clone(),
            });
        }
    };

    loop {
        loop {
            match rx.try_recv() {
                Ok(req) => handle(&mut session, &stats, req),
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        loop {
            let now = Instant::now();
            if now >= next {
                break;
            }
            match rx.recv_timeout(next - now) {
                Ok(req) => handle(&mut session, &stats, req),
                Err(RecvTimeoutError::Timeout) => break,
                Err(RecvTimeoutError::Disconnected) => return,
            }
        }

        let now = Instant::now();
        stats.max_late_ms = stats.max_late_ms.max((now - next).as_secs_f64() * 1e3);
        if let Some(last) = acc.last {
            let dt = (now - last).as_secs_f64();
            acc.intervals += 1;
            acc.sum_interval += dt;
            acc.sum_dev += (dt - period.as_secs_f64()).abs();
            stats.mean_interval_ms = acc.sum_interval / acc.intervals as f64 * 1e3;
            stats.jitter = acc.sum_dev / acc.intervals as f64 / period.as_secs_f64();
        }
        acc.last = Some(now);

        match session.step() {
            Ok(msgs) => hub.publish(&msgs),
            Err(e) => {
                tracing::error!(error = %e, "session step failed; stopping session");
                return;
            }
        }
        stats.ticks += 1;
        snap.send_replace(session.snapshot());

        next += period;
        let now = Instant::now();
        if now > next + MAX_BACKLOG {
            next = now + period;
            stats.resyncs += 1;
        }
    }
}
