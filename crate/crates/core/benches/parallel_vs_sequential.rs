use chair_core::experiment::run_calibration;
use chair_core::features::FeatureExtractor;
use chair_core::signal::{Channel, DEFAULT_FS};
use chair_core::svm::{cross_validate_report, Hyperparams};
use chair_core::synth::{IntentKind, SubjectProfile, Synthesizer};
use chair_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn profile() -> SubjectProfile {
    SubjectProfile::new("bench", 1.5, 10.0, 7)
}

fn featurize(c: &mut Criterion) {
    let mut synth = Synthesizer::new(&profile()).unwrap();
    synth.set_intent(IntentKind::LedLeft13Hz);
    let rec = synth.next_block(40_000).select(&Channel::OCCIPITAL).unwrap();
    let fx = FeatureExtractor::cached(DEFAULT_FS, 4.0);
    let windows: Vec<_> = (0..36).map(|w| rec.slice(w * 1000, fx.window_len()).unwrap()).collect();
    let mut g = c.benchmark_group("featurize_36_windows");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let out = exec.map(&windows, |w| fx.extract(w, Execution::Sequential).unwrap());
                black_box(out)
            })
        });
    }
    g.finish();
}

fn calibration(c: &mut Criterion) {
    let mut g = c.benchmark_group("calibration_session");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(run_calibration(&profile(), 1, exec).unwrap()))
        });
    }
    g.finish();
}

fn cross_validation(c: &mut Criterion) {
    let data = run_calibration(&profile(), 1, Execution::Parallel).unwrap();
    let hyper = Hyperparams { c: 10.0, gamma: 0.05 };
    let mut g = c.benchmark_group("cross_validation_5fold");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(cross_validate_report(&data, hyper, 5, 3, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, featurize, calibration, cross_validation);
criterion_main!(benches);
