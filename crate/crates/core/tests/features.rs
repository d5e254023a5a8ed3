use chair_core::features::{
    cca_coefficient, cca_general, feature_index, feature_names, FeatureExtractor, FeatureVector, Reference, FEATURE_DIM,
};
use chair_core::signal::{Channel, EegSegment};
use chair_core::synth::{pink_noise, IntentKind, SubjectProfile, Synthesizer};
use chair_core::Execution;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Multiple correlation of `x` with span{1, sin, cos} by least squares.
fn ls_correlation(x: &[f64], freq: f64, fs: f64) -> f64 {
    let n = x.len();
    let w = 2.0 * std::f64::consts::PI * freq / fs;
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => (w * i as f64).sin(),
        _ => (w * i as f64).cos(),
    });
    let b = DVector::from_column_slice(x);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    let resid = &b - &a * coef;
    let mean = b.mean();
    let tss: f64 = b.iter().map(|v| (v - mean).powi(2)).sum();
    (1.0 - resid.norm_squared() / tss).max(0.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cca_matches_least_squares(
        x in prop::collection::vec(-10.0f64..10.0, 200..400),
        freq in 5.0f64..60.0,
    ) {
        let r = Reference::new(freq, 1000.0, x.len());
        let rho = cca_coefficient(&x, &r).unwrap();
        prop_assert!((rho - ls_correlation(&x, freq, 1000.0)).abs() < 1e-9);
    }

    #[test]
    fn cca_matches_general_form(x in prop::collection::vec(-1.0f64..1.0, 100..200), freq in 5.0f64..60.0) {
        let n = x.len();
        let r = Reference::new(freq, 1000.0, n);
        let w = 2.0 * std::f64::consts::PI * freq / 1000.0;
        let y = DMatrix::from_fn(n, 2, |i, j| if j == 0 { (w * i as f64).sin() } else { (w * i as f64).cos() });
        let xm = DMatrix::from_column_slice(n, 1, &x);
        prop_assert!((cca_coefficient(&x, &r).unwrap() - cca_general(&xm, &y)).abs() < 1e-9);
    }

    #[test]
    fn cca_is_bounded_and_affine_invariant(
        x in prop::collection::vec(-1.0f64..1.0, 100..200),
        scale in 0.01f64..100.0,
        offset in -50.0f64..50.0,
    ) {
        let r = Reference::new(13.0, 1000.0, x.len());
        let a = cca_coefficient(&x, &r).unwrap();
        let y: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - cca_coefficient(&y, &r).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn feature_vector_csv_round_trip(v in prop::array::uniform18(0.0f64..1.0)) {
        let fv = FeatureVector(v);
        prop_assert_eq!(FeatureVector::from_csv_row(&fv.to_csv_row()).unwrap(), fv);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn cca_extremes() {
    let n = 4000;
    let r = Reference::new(15.0, 1000.0, n);
    let w = 2.0 * std::f64::consts::PI * 15.0 / 1000.0;
    let in_span: Vec<f64> = (0..n).map(|i| 3.0 * (w * i as f64 + 0.7).sin() + 2.0).collect();
    assert!((cca_coefficient(&in_span, &r).unwrap() - 1.0).abs() < 1e-9);
    let v = pink_noise(n, 1000.0, 1.0, 4);
    let mean = v.iter().sum::<f64>() / n as f64;
    let (a, b) = (dot(&v, &r.q1), dot(&v, &r.q2));
    let orth: Vec<f64> = (0..n).map(|i| v[i] - mean - a * r.q1[i] - b * r.q2[i]).collect();
    assert!(cca_coefficient(&orth, &r).unwrap() < 1e-12);
    assert_eq!(cca_coefficient(&vec![2.5; n], &r).unwrap(), 0.0);
    assert!(cca_coefficient(&in_span[..10], &r).is_err());
}

#[test]
fn indexing_and_names() {
    let names = feature_names();
    assert_eq!(names.len(), FEATURE_DIM);
    let mut seen = [false; FEATURE_DIM];
    for e in 0..3 {
        for h in 0..3 {
            for s in 0..2 {
                seen[feature_index(e, h, s)] = true;
            }
        }
    }
    assert!(seen.iter().all(|&b| b));
    assert_eq!(names[feature_index(0, 0, 0)], "O1_n1_f13");
}

fn occipital_window(intent: IntentKind, amp: f64, seed: u64) -> EegSegment {
    let mut s = Synthesizer::new(&SubjectProfile::new("t", amp, 10.0, seed)).unwrap();
    s.set_intent(intent);
    s.next_block(4000).select(&Channel::OCCIPITAL).unwrap()
}

#[test]
fn attended_stimulus_dominates_its_features() {
    let fx = FeatureExtractor::new(1000.0, 4.0);
    for (intent, s) in [(IntentKind::LedLeft13Hz, 0), (IntentKind::LedRight15Hz, 1)] {
        let f = fx.extract(&occipital_window(intent, 10.0, 3), Execution::Sequential).unwrap();
        for e in 0..3 {
            assert!(f.get(e, 0, s) > 0.6, "{intent:?} e{e}: {}", f.get(e, 0, s));
            assert!(f.get(e, 0, s) > 2.0 * f.get(e, 0, 1 - s));
        }
    }
}

#[test]
fn features_are_scale_invariant() {
    let fx = FeatureExtractor::new(1000.0, 4.0);
    let w = occipital_window(IntentKind::LedLeft13Hz, 2.0, 5);
    let scaled = w.map_rows(|r| r.iter().map(|v| 8.0 * v).collect());
    let a = fx.extract(&w, Execution::Sequential).unwrap();
    let b = fx.extract(&scaled, Execution::Sequential).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let fx = FeatureExtractor::new(1000.0, 4.0);
    let w = occipital_window(IntentKind::LedRight15Hz, 3.0, 8);
    assert_eq!(fx.extract(&w, Execution::Sequential).unwrap(), fx.extract(&w, Execution::Parallel).unwrap());
}

#[test]
fn extractor_rejects_bad_windows() {
    let fx = FeatureExtractor::new(1000.0, 4.0);
    let noise = pink_noise(4000, 1000.0, 10.0, 1);
    let two = EegSegment::new(vec![Channel::O1, Channel::O2], 1000.0, vec![noise.clone(), noise.clone()], 0.0).unwrap();
    assert!(fx.extract(&two, Execution::Sequential).is_err());
    let short = occipital_window(IntentKind::None, 0.0, 1).slice(0, 3999).unwrap();
    assert!(fx.extract(&short, Execution::Sequential).is_err());
}
