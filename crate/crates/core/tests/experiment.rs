use std::sync::OnceLock;

use chair_core::experiment::{
    derive_seed, run_calibration, run_online_test, run_test_session, snr_sweep, window_accuracy, OnlineCounts,
    SubjectResult, TrialKind, CALIBRATION_TRIALS, ONLINE_BLINK_TRIALS, ONLINE_TURN_TRIALS,
};
use chair_core::features::FEATURE_DIM;
use chair_core::metrics::{itr, mean, sample_sd, success_rate, truncate2};
use chair_core::report::ExperimentReport;
use chair_core::svm::{train_model, Hyperparams, LabeledDataset, SsvepClass, TrainedModel};
use chair_core::synth::SubjectProfile;
use chair_core::Execution;

const FIXED: Hyperparams = Hyperparams { c: 10.0, gamma: 0.05 };

fn fit(data: &LabeledDataset) -> TrainedModel {
    let x: Vec<&[f64]> = data.samples().iter().map(|s| s.features.as_slice()).collect();
    let y: Vec<SsvepClass> = data.samples().iter().map(|s| s.label).collect();
    train_model(&x, &y, FIXED).unwrap()
}

fn strong() -> &'static (SubjectProfile, LabeledDataset, TrainedModel) {
    static S: OnceLock<(SubjectProfile, LabeledDataset, TrainedModel)> = OnceLock::new();
    S.get_or_init(|| {
        let p = SubjectProfile::new("S", 20.0, 10.0, 5);
        let data = run_calibration(&p, 5, Execution::Parallel).unwrap();
        let model = fit(&data);
        (p, data, model)
    })
}

#[test]
fn calibration_shape() {
    let (_, data, _) = strong();
    assert_eq!(data.len(), 360);
    assert_eq!(data.dim(), FEATURE_DIM);
    for c in SsvepClass::ALL {
        for t in 0..CALIBRATION_TRIALS as u32 {
            let windows = data.samples().iter().filter(|s| s.label == c && s.trial == t).count();
            assert_eq!(windows, 12);
        }
    }
    assert!(data.samples().iter().flat_map(|s| &s.features).all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn sessions_are_deterministic_and_mode_independent() {
    let p = SubjectProfile::new("D", 3.0, 10.0, 9);
    let a = run_test_session(&p, 9, Execution::Sequential).unwrap();
    let b = run_test_session(&p, 9, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 180);
    let c = run_test_session(&p, 10, Execution::Parallel).unwrap();
    assert_ne!(a, c);
}

#[test]
fn online_protocol_shape_and_high_snr_success() {
    let (p, _, model) = strong();
    let out = run_online_test(model, p, 77, Execution::Parallel).unwrap();
    assert_eq!(out.trials.len(), 2 * ONLINE_TURN_TRIALS + ONLINE_BLINK_TRIALS);
    let c = out.counts();
    assert_eq!((c.intended_l, c.intended_r, c.intended_gs), (20, 20, 12));
    assert!(c.success_rate() >= 95.0, "{c:?}");
    let gs: Vec<_> = out.trials.iter().filter(|t| t.kind == TrialKind::GoStop).collect();
    for w in gs.windows(2) {
        if w[0].success() {
            assert_ne!(w[0].intended, w[1].intended);
        }
    }
}

#[test]
fn zero_ssvep_subject_is_at_chance_but_blinks_work() {
    let p = SubjectProfile::new("Z", 0.0, 10.0, 21);
    let data = run_calibration(&p, 21, Execution::Parallel).unwrap();
    let model = fit(&data);
    let test = run_test_session(&p, 21, Execution::Parallel).unwrap();
    let acc = window_accuracy(&model, &test).unwrap();
    assert!((acc - 1.0 / 3.0).abs() < 0.12, "{acc}");
    let c = run_online_test(&model, &p, 21, Execution::Parallel).unwrap().counts();
    assert!(c.actual_gs >= 11, "{c:?}");
    assert!(c.actual_l + c.actual_r < 30, "{c:?}");
}

#[test]
fn accuracy_rises_with_snr() {
    let amps = snr_sweep(5, -30.0, -6.0, 10.0);
    let means: Vec<f64> = amps
        .iter()
        .map(|&a| {
            let accs: Vec<f64> = (0..2)
                .map(|k| {
                    let p = SubjectProfile::new("M", a, 10.0, derive_seed(400, &[k]));
                    let model = fit(&run_calibration(&p, p.seed, Execution::Parallel).unwrap());
                    window_accuracy(&model, &run_test_session(&p, p.seed, Execution::Parallel).unwrap()).unwrap()
                })
                .collect();
            mean(&accs)
        })
        .collect();
    for w in means.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{means:?}");
    }
    assert!(means[4] > 0.95 && means[0] < 0.6, "{means:?}");
}

#[test]
fn seed_derivation_is_stable_and_spread() {
    assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
    assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
}

fn row(id: &str, cv: f64, test: f64, counts: [usize; 6]) -> SubjectResult {
    let c = OnlineCounts {
        intended_l: counts[0],
        actual_l: counts[1],
        intended_r: counts[2],
        actual_r: counts[3],
        intended_gs: counts[4],
        actual_gs: counts[5],
    };
    let sr = c.success_rate();
    SubjectResult {
        id: id.into(),
        ssvep_amp: 1.0,
        noise_amp: 10.0,
        hyper: FIXED,
        cv_accuracy: cv,
        test_accuracy: test,
        counts: c,
        success_rate: sr,
        itr: itr(4, sr / 100.0, 4.015).unwrap_or(0.0),
    }
}

#[test]
fn success_rate_arithmetic() {
    assert_eq!(truncate2(success_rate(31, 32)), 96.87);
    assert_eq!(truncate2(success_rate(28, 32)), 87.5);
    assert_eq!(truncate2(success_rate(26, 32)), 81.25);
    let c = OnlineCounts { intended_l: 10, actual_l: 10, intended_r: 10, actual_r: 9, intended_gs: 12, actual_gs: 12 };
    assert_eq!(c.total(), 32);
    assert_eq!(truncate2(c.success_rate()), 96.87);
}

#[test]
fn report_aggregates_are_recomputed_from_rows() {
    let rows = vec![
        row("A", 99.0, 97.0, [10, 10, 10, 9, 12, 12]),
        row("B", 89.0, 91.0, [10, 8, 10, 9, 12, 11]),
        row("C", 80.0, 75.0, [10, 9, 10, 10, 12, 12]),
    ];
    let r = ExperimentReport::new(3, rows.clone());
    let col = |f: fn(&SubjectResult) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    assert!((r.average.test_accuracy - mean(&col(|r| r.test_accuracy))).abs() < 1e-9);
    assert!((r.std_dev.cv_accuracy - sample_sd(&col(|r| r.cv_accuracy))).abs() < 1e-9);
    assert!((r.average.success_rate - mean(&col(|r| r.success_rate))).abs() < 1e-9);
    let table = r.to_table();
    assert!(table.contains("Average") && table.contains("SD") && table.contains("96.87"));
    assert!(table.contains("n = 4"));
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), 1 + 3 + 2);
    assert!(csv.lines().any(|l| l.starts_with("AVG,")));
    let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}
