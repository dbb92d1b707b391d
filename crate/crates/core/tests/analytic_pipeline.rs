use std::f64::consts::PI;

use breathing::busch::*;
use breathing::spectral::*;
use breathing::QuenchSpec;
use proptest::prelude::*;

fn analytic_peaks(q: &QuenchSpec, periods: f64, max_quanta: usize) -> (AnalyticSignal, PeakSet) {
    let per_period = 32;
    let dt = q.post_period() / per_period as f64;
    let count = (periods * per_period as f64) as usize;
    let signal = breathing_signal_analytic(q, max_quanta, 0.0, dt, count).unwrap();
    let peaks = extract_peaks(&signal.series, &PeakOptions::default()).unwrap();
    (signal, peaks)
}

#[test]
fn fitted_lines_sit_on_the_band_spectrum() {
    let q = QuenchSpec::standard(1.0, 2);
    let (_, peaks) = analytic_peaks(&q, 400.0, 8);
    let lines = BreathingLines::identify(&peaks, q.omega_post);
    let bands = band_spectrum(&q, 8).unwrap();
    let cm = bands.cm_line().unwrap().frequency;
    let rel = bands.entries.iter().find(|l| l.kind == LineKind::Relative && l.upper == 2 && l.lower == 0).unwrap();
    assert!((lines.cm_frequency().unwrap() - cm).abs() < 1e-3);
    assert!((lines.relative_frequency().unwrap() - rel.frequency).abs() < 1e-3);
}

#[test]
fn strong_quench_shows_three_lines() {
    let q = QuenchSpec::new(1.0, 0.3f64.sqrt(), 0.4, 2).unwrap();
    let (_, peaks) = analytic_peaks(&q, 1000.0, 12);
    let lines = BreathingLines::identify(&peaks, q.omega_post);
    let centers: Vec<f64> = lines.band.iter().map(|p| p.center / q.omega_post).collect();
    for target in [1.916, 1.975, 2.000] {
        assert!(centers.iter().any(|c| (c - target).abs() < 0.01), "{target} not in {centers:?}");
    }
}

#[test]
fn signal_matches_its_line_expansion() {
    let q = QuenchSpec::standard(2.0, 2);
    let (signal, _) = analytic_peaks(&q, 10.0, 8);
    for (k, t) in signal.series.times().enumerate().step_by(17) {
        assert!((signal.evaluate(t) - signal.series.samples[k]).abs() < 1e-10);
    }
}

#[test]
fn uncoupled_signal_is_a_single_tone() {
    let q = QuenchSpec::standard(0.0, 2);
    let (_, peaks) = analytic_peaks(&q, 200.0, 8);
    let lines = BreathingLines::identify(&peaks, q.omega_post);
    assert_eq!(lines.band.len(), 1, "{:?}", lines.band);
    assert!((lines.cm_frequency().unwrap() - 2.0).abs() < peaks.resolution / q.omega_post);
}

fn two_tone(n: usize, dt: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            (1.87 * t).cos() + 0.4 * (2.0 * t + 0.3).cos()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn peak_centres_ignore_offset_and_scale(offset in -50.0f64..50.0, scale in 0.01f64..100.0) {
        let dt = 2.0 * PI / 32.0;
        let base = two_tone(3200, dt);
        let a = extract_peaks(&TimeSeries::new(0.0, dt, base.clone()).unwrap(), &PeakOptions::default()).unwrap();
        let shifted = base.iter().map(|v| offset + scale * v).collect();
        let b = extract_peaks(&TimeSeries::new(0.0, dt, shifted).unwrap(), &PeakOptions::default()).unwrap();
        prop_assert_eq!(a.peaks.len(), b.peaks.len());
        for (p, q) in a.by_frequency().iter().zip(b.by_frequency().iter()) {
            prop_assert!((p.center - q.center).abs() < 1e-9);
        }
    }

    #[test]
    fn padding_keeps_peak_centres(pad in 2usize..9) {
        let dt = 2.0 * PI / 32.0;
        let series = TimeSeries::new(0.0, dt, two_tone(3200, dt)).unwrap();
        let opts = |pad| PeakOptions { spectrum: SpectrumOptions { zero_pad_factor: pad, ..SpectrumOptions::default() }, ..PeakOptions::default() };
        let a = extract_peaks(&series, &opts(4)).unwrap();
        let b = extract_peaks(&series, &opts(pad)).unwrap();
        let res = series.resolution();
        for p in a.peaks.iter().take(2) {
            prop_assert!(b.peaks.iter().any(|q| (q.center - p.center).abs() < 0.05 * res), "{} moved", p.center);
        }
    }

    #[test]
    fn analytic_lines_below_twice_trap(g in 0.05f64..30.0) {
        let q = QuenchSpec::standard(g, 2);
        let bands = band_spectrum(&q, 6).unwrap();
        for l in &bands.entries {
            if l.kind == LineKind::Relative && l.upper == l.lower + 2 {
                prop_assert!(l.frequency < 2.0 && l.frequency > 1.5);
            }
        }
    }
}
