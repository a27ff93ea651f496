//! Streaming extraction: per-set detection and short-term tracking (in
//! parallel), then long-term tracking and LOS identification in set order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{detect, DetectConfig};
use super::doppler::estimate_doppler;
use super::long::{LongTracker, Track, TrackPoint, DEFAULT_CHI_NS};
use super::power::PowerAccount;
use super::short::{track_short, ShortTrackConfig};
use super::trackdb::{ExtractMeta, SetInfo, TrackDb};
use crate::error::{Error, Result};
use crate::sim::{Pulse, RecordingHeader, RecordingSet, C0};

pub const DEFAULT_LOS_WINDOW_NS: f64 = 3.0;
pub const DEFAULT_CARRIER: f64 = crate::sim::config::DEFAULT_CARRIER;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub detect: DetectConfig,
    pub short: ShortTrackConfig,
    /// Long-term delay gate, ns.
    pub chi_ns: f64,
    /// A track within this distance of the geometric LOS delay is the LOS.
    pub los_window_ns: f64,
    pub carrier: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            detect: DetectConfig::default(),
            short: ShortTrackConfig::default(),
            chi_ns: DEFAULT_CHI_NS,
            los_window_ns: DEFAULT_LOS_WINDOW_NS,
            carrier: DEFAULT_CARRIER,
        }
    }
}

/// Result of processing one recording set in isolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SetExtraction {
    pub info: SetInfo,
    pub points: Vec<TrackPoint>,
    pub power: PowerAccount,
    pub aborted: usize,
}

/// Detection, short-term tracking and per-set reduction of one set.
pub fn extract_set(set: &RecordingSet, pulse: &Pulse, cfg: &ExtractConfig) -> SetExtraction {
    let mut power = PowerAccount::default();
    let mut aborted = 0;
    let mut noise = 0.0;
    let mut per_snapshot = Vec::with_capacity(set.snapshots.len());
    for s in &set.snapshots {
        let out = detect(s, pulse, &cfg.detect);
        power.total += out.energy - s.h.len() as f64 * out.noise_level;
        noise += out.noise_level;
        aborted += out.aborted as usize;
        per_snapshot.push(out.detections);
    }
    let detections = per_snapshot.iter().map(Vec::len).sum();
    let shorts = track_short(&per_snapshot, &cfg.short);
    let bin = pulse.bin_ns();
    let mut points = Vec::new();
    for tr in &shorts {
        let e: f64 = tr
            .detections
            .iter()
            .map(|(k, d)| d.amplitude.powi(2) * pulse.energy((d.delay_ns - set.snapshots[*k].reference_delay_ns) / bin))
            .sum();
        power.short += e;
        if tr.full_lifetime {
            power.full += e;
            let dets: Vec<_> = tr.detections.iter().map(|(_, d)| *d).collect();
            let doppler = estimate_doppler(&dets, cfg.carrier).map_or(0.0, |d| d.hz);
            points.push(TrackPoint {
                set: set.index,
                t: tr.mean_time(),
                amplitude: tr.mean_amplitude(),
                delay_ns: tr.mean_delay_ns(),
                doppler_hz: doppler,
            });
        }
    }
    points.sort_by(|a, b| a.delay_ns.total_cmp(&b.delay_ns));
    let info = SetInfo {
        index: set.index,
        t0: set.t0,
        d: set.d,
        v_tx: set.v_tx,
        v_rx: set.v_rx,
        snapshots: set.snapshots.len(),
        detections,
        short_tracks: shorts.len(),
        full_tracks: points.len(),
        noise_level: if set.snapshots.is_empty() { 0.0 } else { noise / set.snapshots.len() as f64 },
        los_track: None,
        los_delay_ns: None,
    };
    SetExtraction { info, points, power, aborted }
}

/// Per set, the track closest to the geometric LOS delay `d/c0` within
/// the window; otherwise the earliest track present in that set.
pub fn identify_los(tracks: &[Track], sets: &mut [SetInfo], window_ns: f64) {
    let mut by_set: BTreeMap<usize, Vec<(u64, f64)>> = BTreeMap::new();
    for tr in tracks {
        for p in &tr.points {
            by_set.entry(p.set).or_default().push((tr.id, p.delay_ns));
        }
    }
    for s in sets.iter_mut() {
        let Some(cands) = by_set.get(&s.index) else {
            s.los_track = None;
            s.los_delay_ns = None;
            continue;
        };
        let geo = s.d / C0 * 1e9;
        let near = cands
            .iter()
            .filter(|(_, d)| (d - geo).abs() <= window_ns)
            .min_by(|a, b| (a.1 - geo).abs().total_cmp(&(b.1 - geo).abs()));
        let pick = near.or_else(|| cands.iter().min_by(|a, b| a.1.total_cmp(&b.1)));
        s.los_track = pick.map(|p| p.0);
        s.los_delay_ns = pick.map(|p| p.1);
    }
}

/// Sequential half of the pipeline; accepts per-set results in order.
pub struct Extractor {
    cfg: ExtractConfig,
    header: RecordingHeader,
    tracker: LongTracker,
    sets: Vec<SetInfo>,
    power: PowerAccount,
    aborted: usize,
}

impl Extractor {
    pub fn new(header: RecordingHeader, cfg: ExtractConfig) -> Self {
        Extractor {
            tracker: LongTracker::new(cfg.carrier, cfg.chi_ns),
            cfg,
            header,
            sets: Vec::new(),
            power: PowerAccount::default(),
            aborted: 0,
        }
    }

    pub fn push(&mut self, r: SetExtraction) -> Result<()> {
        if let Some(last) = self.sets.last() {
            if r.info.index <= last.index {
                return Err(Error::Config(format!("set {} arrived after set {}", r.info.index, last.index)));
            }
        }
        self.tracker.push_set(r.info.index, r.points);
        self.power.merge(&r.power);
        self.aborted += r.aborted;
        self.sets.push(r.info);
        Ok(())
    }

    pub fn finish(self) -> TrackDb {
        let tracks = self.tracker.finish();
        let mut sets = self.sets;
        identify_los(&tracks, &mut sets, self.cfg.los_window_ns);
        let mut gaps: Vec<f64> = sets.windows(2).map(|w| w[1].t0 - w[0].t0).collect();
        gaps.sort_by(f64::total_cmp);
        let set_period = gaps.get(gaps.len() / 2).copied().unwrap_or(0.0);
        TrackDb {
            meta: ExtractMeta {
                bandwidth: self.header.bandwidth,
                delay_bins: self.header.delay_bins,
                set_count: sets.len() as u32,
                set_period,
                config: self.cfg,
                power: self.power,
                aborted_snapshots: self.aborted,
            },
            sets,
            tracks,
        }
    }
}

/// Sets handed to the worker pool at a time, per worker.
const CHUNK_PER_JOB: usize = 32;

/// Run the whole pipeline over a stream of sets. `jobs` worker threads
/// process sets concurrently; the result does not depend on `jobs`.
pub fn extract_stream<I>(header: RecordingHeader, sets: I, cfg: &ExtractConfig, jobs: usize) -> Result<TrackDb>
where
    I: IntoIterator<Item = Result<RecordingSet>>,
{
    let pulse = Pulse::new(header.bandwidth);
    let mut ex = Extractor::new(header, *cfg);
    let jobs = jobs.max(1);
    let pool = if jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let mut chunk: Vec<RecordingSet> = Vec::with_capacity(CHUNK_PER_JOB * jobs);
    let flush = |chunk: &mut Vec<RecordingSet>, ex: &mut Extractor| -> Result<()> {
        let results: Vec<SetExtraction> = match &pool {
            Some(p) => p.install(|| chunk.par_iter().map(|s| extract_set(s, &pulse, cfg)).collect()),
            None => chunk.iter().map(|s| extract_set(s, &pulse, cfg)).collect(),
        };
        chunk.clear();
        for r in results {
            ex.push(r)?;
        }
        Ok(())
    };
    for s in sets {
        chunk.push(s?);
        if chunk.len() >= CHUNK_PER_JOB * jobs {
            flush(&mut chunk, &mut ex)?;
        }
    }
    flush(&mut chunk, &mut ex)?;
    Ok(ex.finish())
}
