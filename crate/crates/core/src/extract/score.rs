//! Scoring of extracted tracks against simulator ground truth.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::trackdb::TrackDb;
use crate::sim::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Only paths observed in at least this many sets are scored.
    pub min_sets: usize,
    /// A track point within this delay of the true path counts as a hit.
    pub gate_ns: f64,
    /// Fraction of the path's sets that must carry a gated track point.
    pub min_coverage: f64,
    pub max_delay_rmse_ns: f64,
    pub max_doppler_rel_err: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { min_sets: 5, gate_ns: 1.0, min_coverage: 0.5, max_delay_rmse_ns: 0.5, max_doppler_rel_err: 0.15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    pub id: u64,
    pub sets: usize,
    /// Track holding most of the gated points.
    pub track: Option<u64>,
    /// Distinct tracks the path was split across.
    pub fragments: usize,
    pub coverage: f64,
    pub delay_rmse_ns: f64,
    /// Median relative Doppler error over the covered sets.
    pub doppler_rel_err: f64,
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackScore {
    pub paths: Vec<PathScore>,
    pub recovered: usize,
}

impl TrackScore {
    pub fn fraction(&self) -> f64 {
        if self.paths.is_empty() {
            1.0
        } else {
            self.recovered as f64 / self.paths.len() as f64
        }
    }
}

/// For every sufficiently long-lived true path, take in each set the
/// closest track point within the gate, whichever track it belongs to,
/// and measure coverage, delay RMSE and Doppler error over those points.
pub fn score_tracks(truth: &GroundTruth, db: &TrackDb, cfg: &ScoreConfig) -> TrackScore {
    // (set) -> [(track id, delay, doppler)]
    let mut by_set: HashMap<usize, Vec<(u64, f64, f64)>> = HashMap::new();
    for tr in &db.tracks {
        for p in &tr.points {
            by_set.entry(p.set).or_default().push((tr.id, p.delay_ns, p.doppler_hz));
        }
    }
    let mut per_path: HashMap<u64, Vec<&crate::sim::TruthObs>> = HashMap::new();
    for o in truth.observations.iter().filter(|o| o.in_window) {
        per_path.entry(o.id).or_default().push(o);
    }
    let mut ids: Vec<u64> = per_path.keys().copied().filter(|id| per_path[id].len() >= cfg.min_sets).collect();
    ids.sort_unstable();
    let mut paths = Vec::with_capacity(ids.len());
    for id in ids {
        let obs = &per_path[&id];
        let mut sq = 0.0;
        let mut rel: Vec<f64> = Vec::new();
        let mut used: Vec<u64> = Vec::new();
        let mut hits: HashMap<u64, usize> = HashMap::new();
        for o in obs {
            let Some(c) = by_set.get(&o.set) else { continue };
            let Some(&(k, d, nu)) = c
                .iter()
                .filter(|(_, d, _)| (d - o.delay_ns).abs() <= cfg.gate_ns)
                .min_by(|a, b| (a.1 - o.delay_ns).abs().total_cmp(&(b.1 - o.delay_ns).abs()))
            else {
                continue;
            };
            sq += (d - o.delay_ns).powi(2);
            rel.push((nu - o.doppler_hz).abs() / o.doppler_hz.abs().max(1e-9));
            *hits.entry(k).or_default() += 1;
            if !used.contains(&k) {
                used.push(k);
            }
        }
        let n = rel.len();
        let track = hits.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&k, _)| k);
        let coverage = n as f64 / obs.len() as f64;
        let delay_rmse_ns = if n > 0 { (sq / n as f64).sqrt() } else { f64::INFINITY };
        rel.sort_by(f64::total_cmp);
        let doppler_rel_err = rel.get(rel.len() / 2).copied().unwrap_or(f64::INFINITY);
        let recovered = coverage >= cfg.min_coverage
            && delay_rmse_ns <= cfg.max_delay_rmse_ns
            && doppler_rel_err <= cfg.max_doppler_rel_err;
        paths.push(PathScore {
            id,
            sets: obs.len(),
            track,
            fragments: used.len(),
            coverage,
            delay_rmse_ns,
            doppler_rel_err,
            recovered,
        });
    }
    let recovered = paths.iter().filter(|p| p.recovered).count();
    TrackScore { paths, recovered }
}
