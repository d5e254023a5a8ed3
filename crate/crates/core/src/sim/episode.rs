//! Headless closed-loop episodes with a random operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChairState, CommandKind, Pose, SimConfig, SimEvent, World, WorldMap};
use crate::error::{Error, Result};

/// Physics step of headless episodes, s.
pub const EPISODE_DT: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub duration_s: f64,
    /// Mean gap between operator commands, s. Gaps are uniform on
    /// `[0.5, 2 · mean − 0.5]`.
    pub mean_command_gap_s: f64,
    /// Draw the start pose uniformly from free space instead of the map's.
    pub random_start: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { duration_s: 60.0, mean_command_gap_s: 2.0, random_start: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub ticks: usize,
    pub commands: usize,
    pub rejected: usize,
    pub force_stops: usize,
    pub turns_completed: usize,
    /// Path length, m.
    pub distance: f64,
    pub start: Pose,
    pub end: Pose,
}

/// Uniform pose in free space with at least `clearance` to every wall and
/// obstacle along 36 probe rays.
pub fn random_free_pose(map: &WorldMap, clearance: f64, rng: &mut ChaCha8Rng) -> Result<Pose> {
    for _ in 0..10_000 {
        let x = rng.random_range(map.bounds.min.x..map.bounds.max.x);
        let y = rng.random_range(map.bounds.min.y..map.bounds.max.y);
        let p = Pose::new(x, y, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        if !map.is_free(p.position()) {
            continue;
        }
        let clear = (0..36).all(|k| {
            let theta = k as f64 * std::f64::consts::PI / 18.0;
            map.cast(p.position(), theta).is_none_or(|d| d >= clearance)
        });
        if clear {
            return Ok(p);
        }
    }
    Err(Error::InvalidMap(format!("no free pose with {clearance} m clearance")))
}

/// Drive a chair with random commands. `observe` sees the state after every
/// tick together with that tick's events.
pub fn run_episode(
    map: &WorldMap,
    sim: &SimConfig,
    episode: &EpisodeConfig,
    seed: u64,
    mut observe: impl FnMut(&ChairState, &[SimEvent]),
) -> Result<EpisodeSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = map.clone();
    if episode.random_start {
        map.start = random_free_pose(&map, 0.05, &mut rng)?;
    }
    let cfg = SimConfig { seed: rng.random(), ..sim.clone() };
    let mut world = World::new(map, cfg)?;
    let mut summary = EpisodeSummary { seed, start: world.state().pose, ..Default::default() };
    let gap_hi = (2.0 * episode.mean_command_gap_s - 0.5).max(0.5 + 1e-9);
    let mut next_cmd = 0.0;
    let steps = (episode.duration_s / EPISODE_DT).round() as usize;
    for _ in 0..steps {
        if world.state().time + 1e-9 >= next_cmd {
            let cmd = match rng.random_range(0..10) {
                0..=3 => CommandKind::Go,
                4..=5 => CommandKind::Left,
                6..=7 => CommandKind::Right,
                _ => CommandKind::Stop,
            };
            summary.commands += 1;
            if !world.apply_command(cmd).accepted {
                summary.rejected += 1;
            }
            next_cmd = world.state().time + rng.random_range(0.5..gap_hi);
        }
        let before = world.state().pose.position();
        let events = world.tick(EPISODE_DT)?;
        let after = world.state().pose.position();
        summary.distance += ((after.x - before.x).powi(2) + (after.y - before.y).powi(2)).sqrt();
        summary.ticks += 1;
        for e in &events {
            match e {
                SimEvent::ForceStop { .. } => summary.force_stops += 1,
                SimEvent::TurnComplete { .. } => summary.turns_completed += 1,
            }
        }
        observe(world.state(), &events);
    }
    summary.end = world.state().pose;
    Ok(summary)
}
