use chair_core::sim::{
    run_episode, sense, CommandKind, EpisodeConfig, Motion, Pose, SensorReadings, SimConfig, SimEvent, World, WorldMap,
};
use chair_core::Execution;
use proptest::prelude::*;

fn quiet() -> SimConfig {
    SimConfig { noise_free: true, ..SimConfig::default() }
}

fn corridor(start: &str) -> WorldMap {
    WorldMap::parse(&format!("0,0 10,10\n{start}")).unwrap()
}

#[test]
fn forward_kinematics_in_open_field() {
    let mut w = World::new(WorldMap::open_field(), quiet()).unwrap();
    w.apply_command(CommandKind::Go);
    for _ in 0..20 {
        w.tick(0.05).unwrap();
    }
    let p = w.state().pose;
    assert!((p.x - 0.4).abs() < 1e-9 && p.y.abs() < 1e-9);
    let mut w = World::new(WorldMap::parse("-100,-100 100,100\n0 0 30").unwrap(), quiet()).unwrap();
    w.apply_command(CommandKind::Go);
    for _ in 0..10 {
        w.tick(0.1).unwrap();
    }
    let p = w.state().pose;
    let d = (p.x * p.x + p.y * p.y).sqrt();
    assert!((d - 0.4).abs() < 1e-9);
    assert!((p.y.atan2(p.x) - 30f64.to_radians()).abs() < 1e-9);
}

#[test]
fn stopped_chair_does_not_move() {
    let mut w = World::new(WorldMap::home(), quiet()).unwrap();
    let start = w.state().pose;
    for _ in 0..100 {
        assert!(w.tick(0.1).unwrap().is_empty());
    }
    assert_eq!(w.state().pose, start);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn turns_are_accurate(heading in -180.0f64..180.0, dt in 0.01f64..0.1, left in any::<bool>()) {
        let map = WorldMap::parse(&format!("-100,-100 100,100\n0 0 {heading}")).unwrap();
        let mut w = World::new(map, quiet()).unwrap();
        w.apply_command(if left { CommandKind::Left } else { CommandKind::Right });
        let mut done = None;
        for _ in 0..1000 {
            for e in w.tick(dt).unwrap() {
                if let SimEvent::TurnComplete { heading, .. } = e {
                    done = Some(heading);
                }
            }
            if done.is_some() {
                break;
            }
        }
        let end = done.expect("turn completes");
        let sign = if left { 1.0 } else { -1.0 };
        let delta = chair_core::sim::normalize_angle(end - heading.to_radians()).to_degrees();
        prop_assert!((delta - sign * 60.0).abs() < 0.5, "{delta}");
        prop_assert_eq!(w.state().motion, Motion::Stopped);
        prop_assert!((w.state().time - 2.0).abs() <= dt + 1e-9);
    }
}

#[test]
fn sensor_geometry() {
    let cfg = quiet();
    let open = sense(&Pose::new(0.0, 0.0, 0.3), &WorldMap::open_field(), &cfg, None);
    assert_eq!(open, SensorReadings { front: 4.0, left: 4.0, right: 4.0 });
    let wall = corridor("5 9 90");
    let r = sense(&wall.start, &wall, &cfg, None);
    assert!((r.front - 1.0).abs() <= 0.01, "{}", r.front);
    assert!(r.left >= r.front && r.right >= r.front);
    let touching = corridor("5 9.99 90");
    assert_eq!(sense(&touching.start, &touching, &cfg, None).front, 0.02);
}

#[test]
fn sensor_noise_is_small_and_zero_mean() {
    let map = corridor("5 8 90");
    let mut w = World::new(map, SimConfig { seed: 3, ..SimConfig::default() }).unwrap();
    let mut readings = Vec::new();
    for _ in 0..2000 {
        w.tick(0.05).unwrap();
        readings.push(w.state().sensors.front);
    }
    let mean = readings.iter().sum::<f64>() / readings.len() as f64;
    let sd = (readings.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / readings.len() as f64).sqrt();
    assert!((mean - 2.0).abs() < 0.002, "{mean}");
    assert!((sd - 0.01).abs() < 0.002, "{sd}");
}

#[test]
fn driving_at_a_wall_latches_force_stop() {
    let mut w = World::new(corridor("5 7 90"), quiet()).unwrap();
    assert!(w.apply_command(CommandKind::Go).accepted);
    let mut stop_at = None;
    for i in 0..200 {
        let ev = w.tick(0.05).unwrap();
        if ev.iter().any(|e| matches!(e, SimEvent::ForceStop { .. })) {
            stop_at = Some(i);
            break;
        }
    }
    assert!(stop_at.is_some());
    let s = w.state().clone();
    assert!(s.force_latched && s.motion == Motion::ForceStopped);
    assert!(s.sensors.front < 0.5 && s.sensors.front > 0.47);
    for cmd in [CommandKind::Left, CommandKind::Right, CommandKind::Stop] {
        let out = w.apply_command(cmd);
        assert!(!out.accepted);
        assert_eq!(out.motion, Motion::ForceStopped);
    }
    w.tick(0.05).unwrap();
    assert_eq!(w.state().pose, s.pose);
    assert!(w.apply_command(CommandKind::Go).accepted);
    assert!(!w.state().force_latched);
    w.tick(0.05).unwrap();
    assert_eq!(w.state().motion, Motion::ForceStopped);
    assert_eq!(w.state().pose, s.pose);
}

#[test]
fn random_episodes_are_safe() {
    let map = WorldMap::home();
    let episode = EpisodeConfig { duration_s: 40.0, ..EpisodeConfig::default() };
    let results = Execution::Parallel.map_range(200, |seed| {
        let mut violations = 0;
        let mut collisions = 0;
        let summary = run_episode(&map, &quiet(), &episode, seed as u64, |s, _| {
            if !map.is_free(s.pose.position()) {
                collisions += 1;
            }
            let truth = sense(&s.pose, &map, &quiet(), None);
            if s.motion.is_moving() && truth.min() < 0.5 {
                violations += 1;
            }
            assert_eq!(s.motion == Motion::ForceStopped, s.force_latched);
        })
        .unwrap();
        (violations, collisions, summary.force_stops)
    });
    assert!(results.iter().all(|r| r.0 == 0 && r.1 == 0));
    assert!(results.iter().map(|r| r.2).sum::<usize>() > 50, "episodes should exercise the latch");
}

#[test]
fn episodes_are_deterministic() {
    let a = run_episode(&WorldMap::home(), &SimConfig::default(), &EpisodeConfig::default(), 11, |_, _| {}).unwrap();
    let b = run_episode(&WorldMap::home(), &SimConfig::default(), &EpisodeConfig::default(), 11, |_, _| {}).unwrap();
    assert_eq!(a, b);
}

#[test]
fn map_parsing_errors_carry_line_numbers() {
    let err = WorldMap::parse("0,0 10,10\n1,1 2,x 3,3\n5 5 0").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(WorldMap::parse("0,0 10,10").is_err());
    assert!(WorldMap::parse("0,0 10,10\n1,1 4,1 4,4 1,4\n2 2 0").is_err());
    assert!(WorldMap::parse("0,0 10,10\n0,0 4,0 1,1 4,4 0,4\n8 8 0").is_err());
    assert!(WorldMap::builtin("nowhere").is_none());
}

#[test]
fn invalid_tick_is_rejected() {
    let mut w = World::new(WorldMap::home(), quiet()).unwrap();
    assert!(w.tick(0.0).is_err());
    assert!(w.tick(0.2).is_err());
}
