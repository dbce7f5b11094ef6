//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vidvib_core::band::{extract_ods, magnify, select_band, BandParams, FrequencyBand};
use vidvib_core::displacement::{DisplacementSignal, Units};
use vidvib_core::features::Roi;
use vidvib_core::filter::{analyze_frame, make_quadrature_kernels, FilterParams};
use vidvib_core::multipoint::{
    dominant_frequency_map, mean_signal, mean_spectrum, measure_points, patch_signal,
    patch_weights, point_signals, MeasureParams, SignalMap, WeightKernel,
};
use vidvib_core::spectral::{
    detrend_mean, fft_spectrum, nrmse, pick_modes, sinusoid_amplitude, ModePickParams, Window,
};
use vidvib_core::synth::{synthesize, synthesize_field, synthesize_rigid, Pattern, SyntheticMotionSpec};
use vidvib_core::{Frame, FrameSequence, Point};

const FPS: f64 = 60.0;

fn fresh_runner(cases: u32) -> proptest::test_runner::TestRunner {
    proptest::test_runner::TestRunner::new(ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    })
}

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!(
        "{} criterion {n:>2} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn grating(amplitude: f64, freq: f64, w: usize, h: usize, secs: f64, noise: f64) -> FrameSequence {
    let spec = SyntheticMotionSpec {
        amplitude_px: amplitude,
        freq_hz: freq,
        duration_s: secs,
        noise_sigma: noise,
        seed: 7,
        ..Default::default()
    };
    synthesize(&spec, w, h, FPS).unwrap()
}

fn measure_full(seq: &FrameSequence) -> vidvib_core::multipoint::Measurement {
    let roi = Roi::full(seq.width(), seq.height());
    let kernel = WeightKernel::binomial(5).unwrap();
    measure_points(seq, roi, &kernel, &MeasureParams::default()).unwrap()
}

#[test]
fn c01_frequency_recovery() {
    let start = Instant::now();
    let seq = grating(0.3, 2.67, 256, 256, 10.0, 0.0);
    let m = measure_full(&seq);
    let map = dominant_frequency_map(&m.patched, m.features.roi, 0.3).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let worst = map
        .entries
        .iter()
        .map(|e| (e.freq_hz - 2.67).abs())
        .fold(0.0, f64::max);
    report(
        1,
        "frequency recovery",
        !map.entries.is_empty() && worst <= 0.1 && secs < 60.0,
        format!(
            "{} points, worst |f - 2.67| = {worst:.3} Hz (tol 0.1), runtime {secs:.1} s (limit 60)",
            map.entries.len()
        ),
    );
}

#[test]
fn c02_displacement_fidelity() {
    let seq = grating(0.3, 2.67, 128, 128, 10.0, 0.0);
    let m = measure_full(&seq);
    let truth: Vec<f64> = (0..seq.len())
        .map(|t| 0.3 * (2.0 * PI * 2.67 * t as f64 / FPS).sin())
        .collect();
    let mean = mean_signal(&m.patched).unwrap();
    let mean_err = nrmse(&mean.dx, &truth).unwrap();
    let worst = m
        .patched
        .values()
        .map(|s| nrmse(&s.dx, &truth).unwrap())
        .fold(0.0, f64::max);
    report(
        2,
        "displacement fidelity",
        worst < 1.0,
        format!("NRMSE mean signal {mean_err:.4} %, worst point {worst:.4} % (limit 1 %)"),
    );
}

#[test]
fn c03_amplitude_linearity() {
    let amps = [0.1, 0.2, 0.4];
    let measured: Vec<f64> = amps
        .iter()
        .map(|&a| {
            let seq = grating(a, 2.67, 64, 64, 10.0, 0.0);
            let mean = mean_signal(&measure_full(&seq).patched).unwrap();
            sinusoid_amplitude(&mean.dx, FPS, 2.67)
        })
        .collect();
    let r1 = measured[1] / measured[0];
    let r2 = measured[2] / measured[1];
    report(
        3,
        "amplitude linearity",
        (r1 / 2.0 - 1.0).abs() <= 0.05 && (r2 / 2.0 - 1.0).abs() <= 0.05,
        format!(
            "amplitudes {:.4}/{:.4}/{:.4} px, ratios {r1:.4} and {r2:.4} (2 ± 5 %)",
            measured[0], measured[1], measured[2]
        ),
    );
}

const TONES: [(f64, f64); 4] = [(2.67, 0.4), (3.69, 0.3), (5.42, 0.2), (6.71, 0.1)];

#[test]
fn c04_multi_tone_ranking() {
    let p = Pattern::Grating;
    let seq = synthesize_rigid(p, p.default_scale(), 96, 96, FPS, 600, 0.0, 0, |t| {
        let s: f64 = TONES
            .iter()
            .map(|(f, a)| a * (2.0 * PI * f * t as f64 / FPS).sin())
            .sum();
        [s, 0.0]
    })
    .unwrap();
    let m = measure_full(&seq);
    let (_, spectrum) = mean_spectrum(&m.patched, 0.3, Window::Rect).unwrap();
    let modes = pick_modes(&spectrum, &ModePickParams::default());
    let bin = spectrum.bin_hz();
    let found: Vec<f64> = modes.iter().map(|m| m.freq_hz).collect();
    let pass = modes.len() == 4
        && TONES
            .iter()
            .zip(&modes)
            .all(|((f, _), m)| (m.freq_hz - f).abs() <= bin);
    report(
        4,
        "multi-tone ranking",
        pass,
        format!("modes by SNR rank {found:?}, expected {:?} within {bin} Hz", TONES.map(|t| t.0)),
    );
}

fn noise_signal(p: Point, dx: Vec<f64>) -> DisplacementSignal {
    DisplacementSignal {
        point: p,
        dy: vec![0.0; dx.len()],
        dx,
        units: Units::Px,
        fps: FPS,
        gaps: 0,
    }
}

#[test]
fn c05_patch_processing() {
    let kernel = WeightKernel::binomial(5).unwrap();
    let center = Point::new(10, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = 20_000;
    let features: Vec<Point> = (8..=12)
        .flat_map(|y| (8..=12).map(move |x| Point::new(x, y)))
        .collect();
    let map: SignalMap = features
        .iter()
        .map(|&p| {
            let dx = (0..samples).map(|_| StandardNormal.sample(&mut rng)).collect();
            (p, noise_signal(p, dx))
        })
        .collect();

    let mut sums_exact = true;
    for k in [
        WeightKernel::binomial(3).unwrap(),
        WeightKernel::binomial(5).unwrap(),
        WeightKernel::uniform(3).unwrap(),
    ] {
        for &skip in &features {
            let w = patch_weights(center, |p| map.contains_key(&p) && p != skip, &k);
            let total: f64 = w.iter().map(|(_, v)| v).sum();
            sums_exact &= (total - 1.0).abs() <= 1e-15;
        }
    }

    let weights = patch_weights(center, |p| map.contains_key(&p), &kernel);
    let sum_w2: f64 = weights.iter().map(|(_, w)| w * w).sum();
    let out = patch_signal(center, &map, &kernel).unwrap();
    let mean = out.dx.iter().sum::<f64>() / samples as f64;
    let var = out.dx.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples as f64;
    let rel = (var - sum_w2).abs() / sum_w2;
    report(
        5,
        "patch processing",
        sums_exact && rel < 0.1,
        format!(
            "weights sum to 1: {sums_exact}; variance {var:.5} vs Σw² {sum_w2:.5} over {samples} samples, rel err {:.2} % (limit 10 %)",
            100.0 * rel
        ),
    );
}

#[test]
fn c06_band_formula() {
    let params = BandParams {
        epsilon: 2.0,
        f_min: 0.3,
        fps: FPS,
        bin_hz: 0.1,
    };
    let band = select_band(&[2.6, 2.7, 2.8], &params).unwrap();
    let sigma = (0.02f64 / 3.0).sqrt();
    let (lo, hi) = (2.7 - 2.0 * sigma, 2.7 + 2.0 * sigma);
    let exact = (band.lo_hz - lo).abs() <= 1e-9 && (band.hi_hz - hi).abs() <= 1e-9;

    let mut runner = fresh_runner(1000);
    let strategy = (prop::collection::vec(1.0f64..20.0, 2..40), 0.1f64..3.0);
    let invariants = runner.run(&strategy, |(freqs, eps)| {
        let p = BandParams {
            epsilon: eps,
            f_min: 0.1,
            fps: 200.0,
            bin_hz: 1e-6,
        };
        let b = select_band(&freqs, &p).unwrap();
        let n = freqs.len() as f64;
        let mu = freqs.iter().sum::<f64>() / n;
        let sd = (freqs.iter().map(|f| (f - mu).powi(2)).sum::<f64>() / n).sqrt();
        prop_assume!(eps * sd > 1e-5 && mu - eps * sd > 0.1);
        prop_assert!(((b.lo_hz + b.hi_hz) / 2.0 - mu).abs() < 1e-9);
        prop_assert!((b.hi_hz - b.lo_hz - 2.0 * eps * sd).abs() < 1e-9);
        Ok(())
    });
    report(
        6,
        "band formula",
        exact && invariants.is_ok(),
        format!(
            "[{:.9}, {:.9}] vs [{lo:.9}, {hi:.9}]; 1000-case symmetry/width: {}",
            band.lo_hz,
            band.hi_hz,
            invariants.as_ref().map_or_else(|e| e.to_string(), |_| "ok".into())
        ),
    );
}

fn probe_amplitude(seq: &FrameSequence, freq: f64) -> f64 {
    let points = [
        Point::new(20, 20),
        Point::new(27, 24),
        Point::new(24, 30),
        Point::new(30, 19),
    ];
    let signals = point_signals(seq, &points, &FilterParams::default()).unwrap();
    signals
        .iter()
        .map(|s| sinusoid_amplitude(&s.dx, FPS, freq))
        .sum::<f64>()
        / signals.len() as f64
}

fn bits(seq: &FrameSequence) -> Vec<u32> {
    seq.frames()
        .iter()
        .flat_map(|f| f.data().iter().map(|v| v.to_bits()))
        .collect()
}

#[test]
fn c07_magnification_law() {
    let f = FilterParams::default();
    let band = FrequencyBand::manual(1.5, 2.5).unwrap();
    let full = Roi::full(52, 52);

    let seq = grating(0.05, 2.0, 52, 52, 4.0, 0.0);
    let out = magnify(&seq, full, &band, 10.0, &f).unwrap();
    let before = probe_amplitude(&seq, 2.0);
    let after = probe_amplitude(&out, 2.0);
    let gain_ok = (after / 0.55 - 1.0).abs() <= 0.2;

    let off = grating(0.05, 4.0, 52, 52, 4.0, 0.0);
    let off_out = magnify(&off, full, &band, 10.0, &f).unwrap();
    let (ob, oa) = (probe_amplitude(&off, 4.0), probe_amplitude(&off_out, 4.0));
    let off_change = (oa / ob - 1.0).abs();

    let identity = bits(&magnify(&seq, full, &band, 0.0, &f).unwrap()) == bits(&seq);

    let roi = Roi::new(14, 10, 24, 30);
    let mut outside_ok = true;
    for alpha in [0.0, 1.0, 10.0, 50.0] {
        let o = magnify(&seq, roi, &band, alpha, &f).unwrap();
        for (a, b) in seq.frames().iter().zip(o.frames()) {
            for y in 0..52 {
                for x in 0..52 {
                    if !roi.contains(x, y) {
                        outside_ok &= a.get(x, y).to_bits() == b.get(x, y).to_bits();
                    }
                }
            }
        }
    }
    report(
        7,
        "magnification law",
        gain_ok && off_change < 0.1 && identity && outside_ok,
        format!(
            "in-band {before:.4} -> {after:.4} px (0.55 ± 20 %); 4 Hz change {:.2} % (< 10 %); alpha=0 identical: {identity}; outside ROI identical: {outside_ok}",
            100.0 * off_change
        ),
    );
}

#[test]
fn c08_ods_shape() {
    let (w, h) = (120, 40);
    let (x0, span) = (12.0, 96.0);
    let p = Pattern::Grating;
    let seq = synthesize_field(p, p.default_scale(), w, h, FPS, 240, 0.0, 0, |x, _, t| {
        let shape = (PI * (x as f64 - x0) / span).sin();
        [0.0, 0.3 * shape * (2.0 * PI * 2.0 * t as f64 / FPS).sin()]
    })
    .unwrap();
    let band = FrequencyBand::manual(1.5, 2.5).unwrap();
    let line: Vec<Point> = (0..9).map(|i| Point::new(12 + 12 * i, 20)).collect();
    let ods = extract_ods(&seq, &line, &band, &FilterParams::default()).unwrap();
    let max = ods.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = ods
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - (PI * i as f64 / 8.0).sin()).abs())
        .fold(0.0, f64::max);
    report(
        8,
        "ODS shape",
        worst <= 0.1 && max == 1.0,
        format!("max deviation from half-sine {worst:.4} (tol 0.1), max |value| = {max}"),
    );
}

#[test]
fn c09_rigid_map_spread() {
    let seq = grating(0.3, 2.67, 128, 128, 10.0, 0.01);
    let m = measure_full(&seq);
    let map = dominant_frequency_map(&m.patched, m.features.roi, 0.3).unwrap();
    let bin = FPS / seq.len() as f64;
    let spread = map.spread();
    report(
        9,
        "rigid-body map spread",
        !map.entries.is_empty() && spread < 2.0 * bin,
        format!(
            "{} points, spread {spread:.3} Hz (limit {:.3} Hz)",
            map.entries.len(),
            2.0 * bin
        ),
    );
}

fn vidvib(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_vidvib"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "vidvib {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

/// Runs `steps` in fresh directories at two thread counts and compares every output.
fn same_outputs(steps: &[Vec<&str>]) -> (usize, Vec<String>) {
    let roots: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (root, threads) in roots.iter().zip(["1", "8"]) {
        let base = root.path().to_str().unwrap();
        for step in steps {
            let mut args: Vec<String> = vec!["--threads".into(), threads.into()];
            args.extend(step.iter().map(|a| a.replace("{dir}", base)));
            vidvib(&args.iter().map(String::as_str).collect::<Vec<_>>());
        }
    }
    let (a, b) = (files(roots[0].path()), files(roots[1].path()));
    let mut diffs = Vec::new();
    let rel = |p: &Path, root: &Path| p.strip_prefix(root).unwrap().display().to_string();
    let names_a: Vec<String> = a.iter().map(|p| rel(p, roots[0].path())).collect();
    let names_b: Vec<String> = b.iter().map(|p| rel(p, roots[1].path())).collect();
    if names_a != names_b {
        diffs.push("file lists differ".to_string());
    }
    for (pa, name) in a.iter().zip(&names_a) {
        let pb = roots[1].path().join(name);
        if std::fs::read(pa).ok() != std::fs::read(&pb).ok() {
            diffs.push(name.clone());
        }
    }
    (a.len(), diffs)
}

#[test]
fn c10_determinism() {
    let runs: Vec<(&str, Vec<Vec<&str>>)> = vec![
        (
            "frequency recovery",
            vec![
                vec!["synth", "--amp", "0.3", "--freq", "2.67", "--fps", "60", "--dur", "10", "--out", "{dir}/seq"],
                vec!["measure", "--input", "{dir}/seq", "--out", "{dir}/measure", "--per-point"],
                vec!["bands", "--input", "{dir}/seq", "--out", "{dir}/bands"],
            ],
        ),
        (
            "multi-tone",
            vec![
                vec![
                    "synth", "--amp", "0.4,0.3,0.2,0.1", "--freq", "2.67,3.69,5.42,6.71",
                    "--width", "96", "--height", "96", "--out", "{dir}/seq",
                ],
                vec!["measure", "--input", "{dir}/seq", "--out", "{dir}/measure"],
            ],
        ),
        (
            "magnification",
            vec![
                vec![
                    "synth", "--amp", "0.05", "--freq", "2", "--dur", "4", "--width", "52",
                    "--height", "52", "--out", "{dir}/seq",
                ],
                vec!["magnify", "--input", "{dir}/seq", "--band", "1.5,2.5", "--alpha", "10", "--out", "{dir}/mag"],
                vec!["measure", "--input", "{dir}/mag", "--out", "{dir}/measure"],
            ],
        ),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, steps) in &runs {
        let (count, diffs) = same_outputs(steps);
        pass &= diffs.is_empty() && count > 0;
        detail.push(if diffs.is_empty() {
            format!("{name}: {count} files identical")
        } else {
            format!("{name}: differing {diffs:?}")
        });
    }
    report(10, "determinism across --threads 1/8", pass, detail.join("; "));
}

fn grating_frame(w: usize, h: usize, omega: f64, shift: f64) -> Frame {
    Frame::from_fn(w, h, |x, _| (0.5 + 0.4 * (omega * (x as f64 - shift)).sin()) as f32)
}

#[test]
fn c11_filter_invariants() {
    let k = make_quadrature_kernels(2.0, 0.0).unwrap();
    let omega = 2.0 * PI * k.peak_frequency();
    let b = k.border() + 2;
    let (w, h) = (64, 30);
    let interior: Vec<(usize, usize)> = (b..h - b)
        .flat_map(|y| (b..w - b).map(move |x| (x, y)))
        .collect();
    let base = analyze_frame(&grating_frame(w, h, omega, 0.0), &k).unwrap();
    let reference =
        interior.iter().map(|&(x, y)| base.amplitude(x, y)).sum::<f64>() / interior.len() as f64;
    let mut worst_amp = 0.0f64;
    for i in 1..10 {
        let r = analyze_frame(&grating_frame(w, h, omega, 0.1 * i as f64), &k).unwrap();
        for &(x, y) in &interior {
            worst_amp = worst_amp.max((r.amplitude(x, y) / reference - 1.0).abs());
        }
    }

    let mut runner = fresh_runner(64);
    let worst_dc = std::cell::Cell::new(0.0f64);
    let dc = runner.run(&(0.5f64..4.0, any::<bool>()), |(sigma, vertical)| {
        let k = make_quadrature_kernels(sigma, if vertical { PI / 2.0 } else { 0.0 }).unwrap();
        for kernel in [k.g2(), k.h2()] {
            let s = kernel.iter().sum::<f64>().abs();
            worst_dc.set(worst_dc.get().max(s));
            prop_assert!(s <= 1e-10);
        }
        Ok(())
    });
    let worst_parseval = std::cell::Cell::new(0.0f64);
    let mut runner = fresh_runner(64);
    let parseval = runner.run(&prop::collection::vec(-10.0f64..10.0, 64..400), |x| {
        let s = fft_spectrum(&x, FPS, Window::Rect).unwrap();
        let time: f64 = detrend_mean(&x).iter().map(|v| v * v).sum();
        let rel = (s.energy() - time).abs() / time;
        worst_parseval.set(worst_parseval.get().max(rel));
        prop_assert!(rel <= 1e-9);
        Ok(())
    });
    report(
        11,
        "filter invariants",
        worst_amp <= 0.05 && dc.is_ok() && parseval.is_ok(),
        format!(
            "amplitude change under sub-pixel shift {:.3} % (5 %); max |kernel sum| {:.1e} (1e-10); max Parseval rel err {:.1e} (1e-9)",
            100.0 * worst_amp,
            worst_dc.get(),
            worst_parseval.get()
        ),
    );
}
