//! The session core driven tick by tick, without the network.

use std::sync::OnceLock;

use chair_core::sim::{CommandKind, Motion};
use chair_core::svm::SsvepClass;
use chair_gateway::session::{Input, TELEMETRY_EVERY_TICKS, TICK_S};
use chair_gateway::telemetry::Source;
use chair_gateway::{Catalog, GatewayError, IntentTarget, Mode, Session, SessionConfig, Telemetry};

fn catalog() -> &'static Catalog {
    static C: OnceLock<Catalog> = OnceLock::new();
    C.get_or_init(Catalog::builtin)
}

fn live(map: &str, seed: u64) -> Session {
    let cfg =
        SessionConfig { profile: "demo".into(), map: map.into(), seed, mode: Mode::LiveSim, noise_free_sensors: true };
    Session::live(cfg, catalog()).unwrap()
}

fn run(s: &mut Session, secs: f64) -> Vec<Telemetry> {
    let ticks = (secs / TICK_S).round() as usize;
    (0..ticks).flat_map(|_| s.step().unwrap()).collect()
}

fn commands(msgs: &[Telemetry]) -> Vec<(CommandKind, Source)> {
    msgs.iter()
        .filter_map(|m| match m {
            Telemetry::Command { cmd, source, .. } => Some((*cmd, *source)),
            _ => None,
        })
        .collect()
}

#[test]
fn gaze_left_turns_the_chair_within_six_seconds() {
    let mut s = live("open", 1);
    run(&mut s, 2.0);
    let h0 = s.snapshot().pose.heading;
    s.set_intent(IntentTarget::LedLeft).unwrap();
    let msgs = run(&mut s, 6.0);
    assert_eq!(commands(&msgs).first(), Some(&(CommandKind::Left, Source::Ssvep)));
    s.set_intent(IntentTarget::None).unwrap();
    run(&mut s, 3.0);
    let turned = (s.snapshot().pose.heading - h0).to_degrees();
    assert!(turned > 59.0, "heading moved {turned} deg");
}

#[test]
fn rest_intent_emits_no_commands_for_a_minute() {
    let mut s = live("open", 2);
    let msgs = run(&mut s, 60.0);
    assert!(commands(&msgs).is_empty(), "{:?}", commands(&msgs));
    let decisions = msgs.iter().filter(|m| matches!(m, Telemetry::Decision { .. })).count();
    assert_eq!(decisions, 57);
}

#[test]
fn two_triple_blinks_start_then_stop() {
    let mut s = live("open", 3);
    run(&mut s, 1.0);
    s.set_intent(IntentTarget::Blink3).unwrap();
    let first = run(&mut s, 10.0);
    assert_eq!(s.intent(), IntentTarget::None);
    assert_eq!(commands(&first), [(CommandKind::Go, Source::Blink)]);
    assert_eq!(s.snapshot().motion, Motion::Forward);
    s.set_intent(IntentTarget::Blink3).unwrap();
    let second = run(&mut s, 10.0);
    assert_eq!(commands(&second), [(CommandKind::Stop, Source::Blink)]);
    assert_eq!(s.snapshot().motion, Motion::Stopped);
}

#[test]
fn blink3_reverts_after_four_seconds() {
    let mut s = live("open", 4);
    s.set_intent(IntentTarget::Blink3).unwrap();
    run(&mut s, 3.95);
    assert_eq!(s.intent(), IntentTarget::Blink3);
    run(&mut s, 0.1);
    assert_eq!(s.intent(), IntentTarget::None);
}

#[test]
fn message_cadence_and_causality() {
    let mut s = live("open", 5);
    s.set_intent(IntentTarget::LedRight).unwrap();
    let mut msgs = run(&mut s, 8.0);
    s.set_intent(IntentTarget::Blink3).unwrap();
    msgs.extend(run(&mut s, 8.0));

    let decision_ts: Vec<u64> =
        msgs.iter().filter(|&m| matches!(m, Telemetry::Decision { .. })).map(|m| m.ts_ms()).collect();
    assert!(decision_ts.windows(2).all(|w| w[1] - w[0] == 1000), "{decision_ts:?}");

    let mut last_decision = None;
    let mut saw_command = false;
    for m in &msgs {
        match m {
            Telemetry::Decision { ssvep_class, blink_gesture, ts_ms, .. } => {
                last_decision = Some((*ssvep_class, *blink_gesture, *ts_ms))
            }
            Telemetry::Command { cmd, source, ts_ms, .. } => {
                saw_command = true;
                let (class, gesture, dts) = last_decision.expect("command preceded by a decision");
                assert_eq!(dts, *ts_ms);
                match source {
                    Source::Blink => assert!(gesture),
                    Source::Ssvep => {
                        let expect = if *cmd == CommandKind::Left { SsvepClass::Left13 } else { SsvepClass::Right15 };
                        assert_eq!(class, expect);
                    }
                    Source::Manual => unreachable!(),
                }
            }
            _ => {}
        }
    }
    assert!(saw_command);

    let eeg: Vec<&Telemetry> = msgs.iter().filter(|m| matches!(m, Telemetry::Eeg { .. })).collect();
    assert_eq!(eeg.len() as u64, (16.0 / TICK_S) as u64 / TELEMETRY_EVERY_TICKS);
    let mut next_t0 = 0;
    for m in eeg {
        let Telemetry::Eeg { channels, fs, t0_ms, samples, .. } = m else { unreachable!() };
        assert_eq!(channels, &["O1", "O2", "Oz", "Fp1", "Fp2"]);
        assert_eq!(*fs, 250.0);
        assert_eq!(samples.len(), 5);
        assert!(samples.iter().all(|c| c.len() == 25));
        assert_eq!(*t0_ms, next_t0);
        next_t0 += 100;
    }
    let poses = msgs.iter().filter(|m| matches!(m, Telemetry::Pose { .. })).count();
    assert_eq!(poses, 160);
}

#[test]
fn drive_into_furniture_latches() {
    let mut s = live("home", 6);
    let (o, msgs) = s.command(CommandKind::Go, Some(1)).unwrap();
    assert!(o.accepted);
    assert!(matches!(msgs[..], [Telemetry::Command { source: Source::Manual, seq: Some(1), .. }]));
    let msgs = run(&mut s, 10.0);
    let alarms: Vec<&Telemetry> = msgs.iter().filter(|m| matches!(m, Telemetry::Alarm { .. })).collect();
    assert_eq!(alarms.len(), 1);
    let snap = s.snapshot();
    assert!(snap.force_latched);
    assert_eq!(snap.motion, Motion::ForceStopped);
    assert!(snap.sensors.front < 0.5);
    let (o, _) = s.command(CommandKind::Left, Some(2)).unwrap();
    assert_eq!((o.accepted, o.motion), (false, Motion::ForceStopped));
}

#[test]
fn replay_reproduces_the_trajectory() {
    let mut s = live("home", 7);
    let mut trajectory = Vec::new();
    let script: [(usize, Input); 6] = [
        (10, Input::Intent { target: IntentTarget::LedLeft }),
        (130, Input::Intent { target: IntentTarget::None }),
        (200, Input::Command { cmd: CommandKind::Go, seq: Some(1) }),
        (260, Input::Intent { target: IntentTarget::Blink3 }),
        (400, Input::Command { cmd: CommandKind::Right, seq: Some(2) }),
        (500, Input::Intent { target: IntentTarget::LedRight }),
    ];
    for t in 0..700 {
        for (at, input) in &script {
            if *at == t {
                match *input {
                    Input::Intent { target } => s.set_intent(target).unwrap(),
                    Input::Command { cmd, seq } => drop(s.command(cmd, seq).unwrap()),
                }
            }
        }
        s.step().unwrap();
        trajectory.push(s.snapshot());
    }
    let rec = s.recording().clone();
    assert_eq!(rec.inputs.len(), script.len());
    let json = serde_json::to_string(&rec).unwrap();

    let mut r = Session::replay(serde_json::from_str(&json).unwrap(), catalog()).unwrap();
    assert!(matches!(r.command(CommandKind::Go, Some(9)), Err(GatewayError::Replaying)));
    assert!(matches!(r.set_intent(IntentTarget::LedLeft), Err(GatewayError::Replaying)));
    for expected in &trajectory {
        r.step().unwrap();
        let got = r.snapshot();
        assert_eq!(
            (got.tick, got.pose, got.motion, got.sensors),
            (expected.tick, expected.pose, expected.motion, expected.sensors)
        );
    }
    assert_eq!(r.pending_inputs(), 0);
    assert_eq!(r.recording().inputs, rec.inputs);
}
