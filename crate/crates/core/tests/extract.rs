use std::f64::consts::TAU;

use num_complex::Complex32;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use vmpc_core::extract::{
    detect, estimate_noise_floor, extract_set, extract_stream, score_tracks, track_short, DetectConfig, ExtractConfig,
    ScoreConfig, Threshold, TrackDb,
};
use vmpc_core::scenario::ScenarioId;
use vmpc_core::sim::presets::builtin_config;
use vmpc_core::sim::synth::{synth_snapshot, Grid, PathSample};
use vmpc_core::sim::{run_simulation, CirSnapshot, Pulse, RecordingHeader, RecordingSet};
use vmpc_core::stats::{seeded, StreamRng};

const FC: f64 = 5.7e9;

fn grid(bins: usize) -> Grid {
    Grid { reference_delay_ns: 0.0, bins, bin_ns: 1.0 }
}

fn path(id: u64, amplitude: f64, phase: f64, delay_ns: f64) -> PathSample {
    PathSample { id, amplitude, phase, delay_ns }
}

fn snap(paths: &[PathSample], bins: usize, t: f64, noise: Option<(u64, f64)>) -> CirSnapshot {
    let pulse = Pulse::new(1e9);
    match noise {
        Some((seed, power)) => {
            let mut rng = seeded(seed);
            synth_snapshot(paths, &grid(bins), &pulse, t, Some((&mut rng, power))).unwrap()
        }
        None => synth_snapshot::<StreamRng>(paths, &grid(bins), &pulse, t, None).unwrap(),
    }
}

fn white(n: usize, var: f64, seed: u64) -> Vec<Complex32> {
    let mut rng = seeded(seed);
    let s = (var / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex32::new((s * re) as f32, (s * im) as f32)
        })
        .collect()
}

#[test]
fn noise_floor_of_white_noise() {
    for seed in 0..20 {
        let est = estimate_noise_floor(&white(4096, 2.5e-3, seed));
        assert!((est / 2.5e-3 - 1.0).abs() < 0.10, "seed {seed}: {est}");
    }
    assert_eq!(estimate_noise_floor(&[Complex32::new(0.0, 0.0); 128]), 0.0);
}

#[test]
fn noise_floor_ignores_a_strong_path() {
    for seed in 0..20 {
        let s = snap(&[path(1, 1.0, 0.4, 2000.3)], 4096, 0.0, Some((seed, 1e-4)));
        let est = estimate_noise_floor(&s.h);
        assert!((est / 1e-4 - 1.0).abs() < 0.15, "seed {seed}: {est}");
    }
}

#[test]
fn single_path_at_thirty_db() {
    let pulse = Pulse::new(1e9);
    let mut worst_delay: f64 = 0.0;
    let mut amp_err = 0.0;
    for seed in 0..100 {
        let s = snap(&[path(1, 1.0, 1.1, 100.0)], 512, 0.0, Some((1000 + seed, 1e-3)));
        let out = detect(&s, &pulse, &DetectConfig::default());
        let d = out
            .detections
            .iter()
            .min_by(|a, b| (a.delay_ns - 100.0).abs().total_cmp(&(b.delay_ns - 100.0).abs()))
            .unwrap();
        worst_delay = worst_delay.max((d.delay_ns - 100.0).abs());
        amp_err += (20.0 * d.amplitude.log10()).abs();
    }
    assert!(worst_delay <= 0.5, "{worst_delay}");
    assert!(amp_err / 100.0 <= 0.2, "{}", amp_err / 100.0);
}

#[test]
fn two_paths_one_and_a_half_ns_apart_are_resolved() {
    let pulse = Pulse::new(1e9);
    for (phase, x) in [(0.0, 100.0), (1.3, 100.25), (2.9, 100.5), (-2.0, 100.8)] {
        let s = snap(&[path(1, 1.0, 0.0, x), path(2, 1.0, phase, x + 1.5)], 256, 0.0, None);
        let out = detect(&s, &pulse, &DetectConfig::default());
        assert_eq!(out.detections.len(), 2, "{x} {phase}: {:?}", out.detections);
        let mut d: Vec<f64> = out.detections.iter().map(|d| d.delay_ns).collect();
        d.sort_by(f64::total_cmp);
        assert!((d[0] - x).abs() < 0.05 && (d[1] - x - 1.5).abs() < 0.05, "{d:?}");
    }
}

#[test]
fn six_db_threshold_false_alarms_follow_exponential_tail() {
    // Each noise bin exceeds four times the mean with probability e^-4.
    let pulse = Pulse::new(1e9);
    let bins = 1024;
    let runs = 200;
    let mut peaks = 0usize;
    for seed in 0..runs {
        let s = snap(&[], bins, 0.0, Some((seed, 1e-3)));
        let out = detect(&s, &pulse, &DetectConfig::default());
        assert!(!out.aborted);
        peaks += out.detections.len();
    }
    let mean = peaks as f64 / runs as f64;
    let upper = bins as f64 * (-4.0f64).exp();
    assert!(mean > 0.0 && mean < upper, "{mean} vs {upper}");
}

#[test]
fn false_alarm_threshold_keeps_noise_snapshots_empty() {
    let pulse = Pulse::new(1e9);
    let cfg = DetectConfig { threshold: Threshold::FalseAlarm { p: 1e-3 }, ..DetectConfig::default() };
    let clean = (0..500)
        .filter(|&seed| detect(&snap(&[], 1024, 0.0, Some((seed, 1e-3))), &pulse, &cfg).detections.is_empty())
        .count();
    assert!(clean >= 495, "{clean}/500");
}

#[test]
fn drifting_path_gives_one_full_lifetime_short_track() {
    let pulse = Pulse::new(1e9);
    let per: Vec<_> = (0..8)
        .map(|k| {
            let s =
                snap(&[path(1, 1.0, 0.3 * k as f64, 120.2 + 0.05 * k as f64)], 256, k as f64 * 4e-4, Some((k, 1e-4)));
            detect(&s, &pulse, &DetectConfig::default()).detections
        })
        .collect();
    let strong: Vec<_> =
        track_short(&per, &Default::default()).into_iter().filter(|t| t.mean_amplitude() > 0.5).collect();
    assert_eq!(strong.len(), 1);
    assert!(strong[0].full_lifetime);
    assert_eq!(strong[0].detections.len(), 8);
}

/// Sets of 8 snapshots at 0.4 ms; `paths(t)` lists the paths at time `t`.
fn recording(
    sets: usize,
    period: f64,
    bins: usize,
    noise: Option<f64>,
    paths: impl Fn(usize, f64) -> Vec<PathSample>,
) -> (RecordingHeader, Vec<RecordingSet>) {
    let header = RecordingHeader { bandwidth: 1e9, bin_s: 1e-9, delay_bins: bins as u32, set_count: sets as u32 };
    let out = (0..sets)
        .map(|i| {
            let t0 = i as f64 * period;
            let snapshots = (0..8)
                .map(|k| {
                    let t = t0 + k as f64 * 4e-4;
                    snap(&paths(k, t), bins, t, noise.map(|p| ((i * 8 + k) as u64, p)))
                })
                .collect();
            RecordingSet { index: i, t0, d: 60.0, v_tx: 20.0, v_rx: 20.0, snapshots }
        })
        .collect();
    (header, out)
}

fn moving(id: u64, a: f64, tau0: f64, nu: f64, t: f64) -> PathSample {
    path(id, a, TAU * nu * t, tau0 - nu / FC * t * 1e9)
}

#[test]
fn one_path_over_ten_sets_is_one_track() {
    let (header, sets) = recording(10, 0.05, 512, Some(1e-4), |_, t| vec![moving(1, 1.0, 400.0, 1000.0, t)]);
    let db = extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).unwrap();
    let strong: Vec<_> = db.tracks.iter().filter(|t| t.points[0].amplitude > 0.5).collect();
    assert_eq!(strong.len(), 1);
    assert_eq!(strong[0].lifetime_sets(), 9);
    for p in &strong[0].points {
        assert!((p.doppler_hz / 1000.0 - 1.0).abs() < 0.10, "{p:?}");
    }
}

#[test]
fn missing_set_splits_the_track() {
    let (header, mut sets) = recording(8, 0.02, 512, None, |_, t| vec![moving(1, 1.0, 300.0, 300.0, t)]);
    for s in sets[4].snapshots.iter_mut() {
        *s = snap(&[], 512, s.t, None);
    }
    let db = extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).unwrap();
    let spans: Vec<_> = db.tracks.iter().map(|t| (t.first_set(), t.last_set())).collect();
    assert_eq!(spans, vec![(0, 3), (5, 7)]);
}

#[test]
fn parallel_paths_keep_their_identity() {
    let (header, sets) = recording(30, 0.01, 512, Some(1e-4), |_, t| {
        vec![moving(1, 1.0, 300.0, 400.0, t), moving(2, 0.6, 310.0, 410.0, t)]
    });
    let db = extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).unwrap();
    let strong: Vec<_> = db.tracks.iter().filter(|t| t.points[0].amplitude > 0.3).collect();
    assert_eq!(strong.len(), 2);
    for t in strong {
        assert_eq!(t.points.len(), 30);
        let a = t.points[0].amplitude;
        assert!(t.points.iter().all(|p| (p.amplitude / a - 1.0).abs() < 0.1));
    }
}

#[test]
fn weak_clutter_costs_detection_power() {
    // Clutter at the noise level over a tenth of the grid: below threshold, but
    // a large share of the energy.
    let pulse = Pulse::new(1e9);
    let snapshots = (0..8)
        .map(|k| {
            let mut paths: Vec<_> =
                (0..400).map(|j| path(10 + j, 1e-3, (j * 7 + k) as f64, 150.0 + 1.1 * j as f64)).collect();
            paths.push(path(1, 0.03, 0.0, 100.0));
            snap(&paths, 4096, k as f64 * 4e-4, Some((k, 1e-6)))
        })
        .collect();
    let set = RecordingSet { index: 0, t0: 0.0, d: 30.0, v_tx: 0.0, v_rx: 0.0, snapshots };
    let out = extract_set(&set, &pulse, &ExtractConfig::default());
    let loss = out.power.detection_loss_db().unwrap();
    assert!(loss > 0.1, "{loss} {:?}", out.power);
}

#[test]
fn perfect_capture_loses_nothing() {
    let pulse = Pulse::new(1e9);
    let snapshots = (0..8)
        .map(|k| snap(&[path(1, 1.0, 0.0, 100.0), path(2, 0.5, 1.0, 140.0)], 256, k as f64 * 4e-4, None))
        .collect();
    let set = RecordingSet { index: 0, t0: 0.0, d: 30.0, v_tx: 0.0, v_rx: 0.0, snapshots };
    let p = extract_set(&set, &pulse, &ExtractConfig::default()).power;
    assert!(p.detection_loss_db().unwrap().abs() < 0.01);
    assert!(p.longterm_loss_db().unwrap().abs() < 0.01);
}

#[test]
fn half_energy_in_partial_tracks_is_three_db() {
    let pulse = Pulse::new(1e9);
    let snapshots = (0..8)
        .map(|k| {
            let mut paths = vec![path(1, 1.0, 0.0, 100.0)];
            if k < 4 {
                paths.push(path(2, 2f64.sqrt(), 1.0, 160.0));
            }
            snap(&paths, 256, k as f64 * 4e-4, None)
        })
        .collect();
    let set = RecordingSet { index: 0, t0: 0.0, d: 30.0, v_tx: 0.0, v_rx: 0.0, snapshots };
    let p = extract_set(&set, &pulse, &ExtractConfig::default()).power;
    assert!((p.longterm_loss_db().unwrap() - 3.0103).abs() < 0.01, "{p:?}");
}

fn hot_run(seconds: f64) -> (vmpc_core::sim::GroundTruth, RecordingHeader, Vec<RecordingSet>) {
    let mut cfg = builtin_config(ScenarioId::HOT, 3);
    cfg.duration = seconds;
    cfg.calibrate = true;
    let header = vmpc_core::sim::Simulator::new(cfg.clone()).unwrap().header();
    let (sets, truth) = run_simulation(cfg).unwrap();
    (truth, header, sets)
}

#[test]
fn approaching_los_has_positive_doppler() {
    let (truth, header, sets) = hot_run(2.0);
    let db = extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).unwrap();
    let los = truth.mpcs.iter().find(|m| m.is_los).unwrap().id;
    let mut checked = 0;
    for o in truth.observations.iter().filter(|o| o.id == los) {
        assert!(o.doppler_hz > 0.0);
        let s = db.set(o.set).unwrap();
        if let Some(tau) = s.los_delay_ns {
            let tr = db.tracks.iter().find(|t| Some(t.id) == s.los_track).unwrap();
            let p = tr.point_at(o.set).unwrap();
            assert_eq!(p.delay_ns, tau);
            assert!(p.doppler_hz > 0.0);
            assert!((p.doppler_hz / o.doppler_hz - 1.0).abs() < 0.05);
            checked += 1;
        }
    }
    assert!(checked > 150, "{checked}");
}

#[test]
fn tracks_are_contiguous_and_recover_truth() {
    let (truth, header, sets) = hot_run(4.0);
    let db = extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).unwrap();
    for t in &db.tracks {
        assert!(t.points.windows(2).all(|w| w[0].set + 1 == w[1].set));
    }
    let score = score_tracks(&truth, &db, &ScoreConfig::default());
    assert!(score.fraction() >= 0.9, "{:?}", score);
}

#[test]
fn worker_count_does_not_change_the_result() {
    let (_, header, sets) = hot_run(1.0);
    let cfg = ExtractConfig::default();
    let a = extract_stream(header, sets.clone().into_iter().map(Ok), &cfg, 1).unwrap();
    let b = extract_stream(header, sets.into_iter().map(Ok), &cfg, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn track_database_roundtrips() {
    let (_, header, sets) = hot_run(1.0);
    let db = extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).unwrap();
    assert!(!db.tracks.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tracks.jsonl");
    db.save(&p).unwrap();
    assert_eq!(TrackDb::load(&p).unwrap(), db);
}

#[test]
fn track_database_rejects_gaps() {
    let text = concat!(
        r#"{"kind":"point","k":1,"i":0,"t":0.0,"a":1.0,"tau":10.0,"nu":0.0}"#,
        "\n",
        r#"{"kind":"point","k":1,"i":2,"t":0.0,"a":1.0,"tau":10.0,"nu":0.0}"#,
        "\n"
    );
    let err = TrackDb::read_from(text.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_ends_below_threshold(
        paths in prop::collection::vec((0.01f64..1.0, 0.0f64..TAU, 20.0f64..230.0), 1..6),
        seed in 0u64..1000,
    ) {
        let pulse = Pulse::new(1e9);
        let ps: Vec<_> = paths.iter().enumerate().map(|(k, &(a, ph, d))| path(k as u64, a, ph, d)).collect();
        let s = snap(&ps, 256, 0.0, Some((seed, 1e-4)));
        let out = detect(&s, &pulse, &DetectConfig::default());
        prop_assert!(out.aborted || out.residual_peak < out.threshold);
    }
}
