use chair_core::signal::Channel;
use chair_core::synth::{generate, pink_noise, Intent, IntentKind, SubjectProfile, Synthesizer};
use proptest::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn power_spectrum(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf[..x.len() / 2].iter().map(|c| c.norm_sqr()).collect()
}

#[test]
fn ssvep_harmonics_appear_at_stimulus_multiples() {
    let p = SubjectProfile::new("f", 8.0, 1.0, 2);
    let mut s = Synthesizer::new(&p).unwrap();
    s.set_intent(IntentKind::LedRight15Hz);
    let seg = s.next_block(10_000);
    let spec = power_spectrum(seg.channel(Channel::Oz).unwrap());
    // 0.1 Hz bins over 10 s.
    let bin = |f: f64| (f * 10.0).round() as usize;
    let floor = spec[bin(20.0)..bin(25.0)].iter().sum::<f64>() / (bin(25.0) - bin(20.0)) as f64;
    for (h, ratio) in [(1.0, 1.0), (2.0, 0.5), (3.0, 0.25)] {
        let peak = spec[bin(15.0 * h)];
        assert!(peak > 1000.0 * floor, "harmonic {h}");
        let expected = (ratio * 8.0 * 10_000.0 / 2.0f64).powi(2);
        assert!((peak / expected - 1.0).abs() < 0.1, "harmonic {h}: {peak} vs {expected}");
    }
    let fp1 = power_spectrum(seg.channel(Channel::Fp1).unwrap());
    assert!(fp1[bin(15.0)] < 100.0 * floor);
}

#[test]
fn background_falls_as_one_over_f() {
    let x = pink_noise(200_000, 1000.0, 10.0, 3);
    let spec = power_spectrum(&x);
    let df = 1000.0 / x.len() as f64;
    let band = |lo: f64, hi: f64| {
        let (a, b) = ((lo / df) as usize, (hi / df) as usize);
        spec[a..b].iter().sum::<f64>() / (b - a) as f64
    };
    // An octave apart: 1/f means half the density.
    for f in [4.0, 8.0, 16.0, 32.0] {
        let ratio = band(2.0 * f * 0.9, 2.0 * f * 1.1) / band(f * 0.9, f * 1.1);
        assert!((ratio - 0.5).abs() < 0.12, "{f} Hz: {ratio}");
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    assert!((rms - 10.0).abs() < 0.5, "{rms}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn streaming_blocks_match_one_shot(cuts in prop::collection::vec(1usize..700, 1..8), seed in any::<u64>()) {
        let p = SubjectProfile::new("s", 2.0, 10.0, seed);
        let total: usize = cuts.iter().sum();
        let mut a = Synthesizer::new(&p).unwrap();
        a.set_intent(IntentKind::LedLeft13Hz);
        let whole = a.next_block(total);
        let mut b = Synthesizer::new(&p).unwrap();
        b.set_intent(IntentKind::LedLeft13Hz);
        let mut pieces = b.next_block(cuts[0]);
        for &n in &cuts[1..] {
            pieces.append(&b.next_block(n)).unwrap();
        }
        prop_assert_eq!(whole.data(), pieces.data());
    }

    #[test]
    fn background_is_independent_of_the_timeline(seed in any::<u64>()) {
        let p = SubjectProfile { ssvep_amp: [0.0; 3], blink_amp: 0.0, ..SubjectProfile::new("t", 0.0, 10.0, seed) };
        let rest = generate(&p, &[Intent::new(IntentKind::None, 0.0)], 6.0).unwrap();
        let busy = generate(
            &p,
            &[Intent::new(IntentKind::LedLeft13Hz, 0.0), Intent::new(IntentKind::BlinkTriple, 2.0)],
            6.0,
        )
        .unwrap();
        prop_assert_eq!(rest.data(), busy.data());
    }
}
