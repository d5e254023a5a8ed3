use chair_core::blink::{
    bandpass, detect_blinks, is_triple_blink, BlinkDetector, BlinkEvent, BlinkTemplate, BAND_HI_HZ, BAND_LO_HZ,
    DEFAULT_THRESHOLD,
};
use chair_core::signal::{Channel, EegSegment};
use chair_core::synth::{blink_amp_for_snr, IntentKind, SubjectProfile, Synthesizer, GESTURE_WINDOW_S};
use chair_core::Execution;
use proptest::prelude::*;

fn frontal_window(intent: IntentKind, snr_db: f64, seed: u64) -> (EegSegment, Vec<f64>) {
    let mut p = SubjectProfile::new("b", 0.0, 10.0, seed);
    p.blink_amp = blink_amp_for_snr(10.0, snr_db);
    let mut s = Synthesizer::new(&p).unwrap();
    s.set_intent(intent);
    let seg = s.next_block(4000).select(&Channel::FRONTAL).unwrap();
    (bandpass(&seg, BAND_LO_HZ, BAND_HI_HZ).unwrap(), s.blink_centers().to_vec())
}

#[test]
fn snr_helper_round_trips() {
    let mut p = SubjectProfile::new("b", 0.0, 7.0, 0);
    p.blink_amp = blink_amp_for_snr(7.0, 10.0);
    assert!((p.blink_snr_db() - 10.0).abs() < 1e-12);
}

#[test]
fn triple_blinks_found_at_10_db() {
    let outcomes = Execution::Parallel.map_range(100, |seed| {
        let (seg, centres) = frontal_window(IntentKind::BlinkTriple, 10.0, 1000 + seed as u64);
        let ev = detect_blinks(&seg, &BlinkTemplate::default(), DEFAULT_THRESHOLD).unwrap();
        let located = ev.len() == 3 && ev.iter().zip(&centres).all(|(e, c)| (e.t - c).abs() < 0.05);
        is_triple_blink(&ev, GESTURE_WINDOW_S) && located
    });
    let hits = outcomes.iter().filter(|&&h| h).count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn blink_free_windows_are_quiet() {
    let counts = Execution::Parallel.map_range(200, |seed| {
        let (seg, _) = frontal_window(IntentKind::None, 10.0, 5000 + seed as u64);
        detect_blinks(&seg, &BlinkTemplate::default(), DEFAULT_THRESHOLD).unwrap().len()
    });
    let rate = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    assert!(rate < 0.05, "{rate} false events per window");
}

#[test]
fn power_of_two_scaling_is_exact() {
    let (seg, _) = frontal_window(IntentKind::BlinkTriple, 10.0, 42);
    let det = BlinkDetector::default();
    let base = det.detect(&seg).unwrap();
    for k in [0.25, 2.0, 1024.0] {
        let scaled = seg.map_rows(|r| r.iter().map(|v| k * v).collect());
        assert_eq!(det.detect(&scaled).unwrap(), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn arbitrary_scaling_keeps_event_times(seed in 0u64..1000, k in 0.001f64..1000.0) {
        let (seg, _) = frontal_window(IntentKind::BlinkTriple, 12.0, seed);
        let det = BlinkDetector::default();
        let a = det.detect(&seg).unwrap();
        let b = det.detect(&seg.map_rows(|r| r.iter().map(|v| k * v).collect())).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.t, y.t);
            prop_assert!((x.ccv - y.ccv).abs() < 1e-9);
        }
    }

    #[test]
    fn refractory_separates_events(seed in 0u64..1000) {
        let (seg, _) = frontal_window(IntentKind::BlinkTriple, 6.0, seed);
        let det = BlinkDetector::default();
        let ev = det.detect(&seg).unwrap();
        for w in ev.windows(2) {
            prop_assert!(w[1].t - w[0].t >= det.refractory_s - 1e-9);
        }
        prop_assert!(ev.iter().all(|e| e.ccv >= det.threshold));
    }
}

#[test]
fn triple_requires_exactly_three_in_span() {
    let ev = |ts: &[f64]| ts.iter().map(|&t| BlinkEvent { t, ccv: 0.9, channel: "Fp1".into() }).collect::<Vec<_>>();
    assert!(is_triple_blink(&ev(&[0.5, 1.5, 2.5]), 4.0));
    assert!(is_triple_blink(&ev(&[0.0, 4.0, 8.0, 9.0, 10.0]), 2.0));
    assert!(!is_triple_blink(&ev(&[0.5, 1.0, 1.5, 2.0]), 4.0));
}

#[test]
fn threshold_outside_unit_interval_is_rejected() {
    let (seg, _) = frontal_window(IntentKind::None, 10.0, 1);
    assert!(detect_blinks(&seg, &BlinkTemplate::default(), 1.0).is_err());
    assert!(detect_blinks(&seg, &BlinkTemplate::default(), 0.0).is_err());
}
