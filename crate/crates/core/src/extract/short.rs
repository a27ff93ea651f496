//! Association of detections across the snapshots of one set.

use serde::{Deserialize, Serialize};

use super::detect::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortTrackConfig {
    /// Search half-widths around the seed for the second snapshot.
    pub first_delay_ns: f64,
    pub first_db: f64,
    /// Search half-widths around the extrapolated prediction afterwards.
    pub next_delay_ns: f64,
    pub next_db: f64,
    /// Detections needed before a chain counts as a track.
    pub min_detections: usize,
}

impl Default for ShortTrackConfig {
    fn default() -> Self {
        ShortTrackConfig { first_delay_ns: 1.5, first_db: 6.0, next_delay_ns: 1.0, next_db: 4.0, min_detections: 3 }
    }
}

/// Detections of one path in consecutive snapshots of one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTrack {
    /// `(snapshot index, detection)`, consecutive indices.
    pub detections: Vec<(usize, Detection)>,
    /// The track covers every snapshot of its set.
    pub full_lifetime: bool,
}

impl ShortTrack {
    pub fn mean_amplitude(&self) -> f64 {
        self.detections.iter().map(|(_, d)| d.amplitude).sum::<f64>() / self.detections.len() as f64
    }

    pub fn mean_delay_ns(&self) -> f64 {
        self.detections.iter().map(|(_, d)| d.delay_ns).sum::<f64>() / self.detections.len() as f64
    }

    pub fn mean_time(&self) -> f64 {
        self.detections.iter().map(|(_, d)| d.t).sum::<f64>() / self.detections.len() as f64
    }
}

fn db(a: f64) -> f64 {
    20.0 * a.max(1e-300).log10()
}

/// Chain detections strongest-first.
///
/// Seeds are taken snapshot by snapshot, strongest first. From each seed
/// the chain grows into the next snapshot while a detection lies inside the
/// search window: around the seed for the second detection, then around the
/// linear extrapolation of the last two. Chains shorter than
/// `min_detections` are dropped and give back everything but their seed.
pub fn track_short(snapshots: &[Vec<Detection>], cfg: &ShortTrackConfig) -> Vec<ShortTrack> {
    let n = snapshots.len();
    let mut free: Vec<Vec<bool>> = snapshots.iter().map(|s| vec![true; s.len()]).collect();
    let mut tracks = Vec::new();
    for s0 in 0..n {
        let mut order: Vec<usize> = (0..snapshots[s0].len()).collect();
        order.sort_by(|&a, &b| snapshots[s0][b].amplitude.total_cmp(&snapshots[s0][a].amplitude).then(a.cmp(&b)));
        for seed in order {
            if !free[s0][seed] {
                continue;
            }
            free[s0][seed] = false;
            let mut chain: Vec<(usize, usize)> = vec![(s0, seed)];
            for s in s0 + 1..n {
                let (ls, li) = chain[chain.len() - 1];
                let last = &snapshots[ls][li];
                let (center_tau, center_db, w_tau, w_db) = if chain.len() == 1 {
                    (last.delay_ns, db(last.amplitude), cfg.first_delay_ns, cfg.first_db)
                } else {
                    let (ps, pi) = chain[chain.len() - 2];
                    let prev = &snapshots[ps][pi];
                    let next_t = snapshots[s].first().map_or(last.t, |d| d.t);
                    let dt = last.t - prev.t;
                    let scale = if dt > 0.0 { (next_t - last.t) / dt } else { 1.0 };
                    (
                        last.delay_ns + (last.delay_ns - prev.delay_ns) * scale,
                        db(last.amplitude) + (db(last.amplitude) - db(prev.amplitude)) * scale,
                        cfg.next_delay_ns,
                        cfg.next_db,
                    )
                };
                let mut best: Option<(usize, f64)> = None;
                for (k, d) in snapshots[s].iter().enumerate() {
                    if !free[s][k] {
                        continue;
                    }
                    let dt = (d.delay_ns - center_tau) / w_tau;
                    let da = (db(d.amplitude) - center_db) / w_db;
                    if dt.abs() <= 1.0 && da.abs() <= 1.0 {
                        let cost = dt * dt + da * da;
                        if best.is_none_or(|(_, c)| cost < c) {
                            best = Some((k, cost));
                        }
                    }
                }
                match best {
                    Some((k, _)) => {
                        free[s][k] = false;
                        chain.push((s, k));
                    }
                    None => break,
                }
            }
            if chain.len() >= cfg.min_detections.max(1) {
                let full_lifetime = s0 == 0 && chain.len() == n;
                tracks.push(ShortTrack {
                    detections: chain.iter().map(|&(s, k)| (s, snapshots[s][k])).collect(),
                    full_lifetime,
                });
            } else {
                for &(s, k) in &chain[1..] {
                    free[s][k] = true;
                }
            }
        }
    }
    tracks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(t: f64, delay: f64, a: f64) -> Detection {
        Detection { t, delay_ns: delay, amplitude: a, phase: 0.0 }
    }

    #[test]
    fn drifting_path_forms_one_full_track() {
        let snaps: Vec<Vec<Detection>> =
            (0..8).map(|s| vec![det(s as f64 * 4e-4, 100.0 + 0.05 * s as f64, 1.0)]).collect();
        let t = track_short(&snaps, &ShortTrackConfig::default());
        assert_eq!(t.len(), 1);
        assert!(t[0].full_lifetime);
        assert_eq!(t[0].detections.len(), 8);
    }

    #[test]
    fn lone_detection_is_not_a_track() {
        let mut snaps = vec![Vec::new(); 8];
        snaps[0].push(det(0.0, 50.0, 1.0));
        assert!(track_short(&snaps, &ShortTrackConfig::default()).is_empty());
    }

    #[test]
    fn crossing_paths_keep_amplitude_identity() {
        // Delays cross between snapshots 3 and 4; the 6 dB gap decides.
        let snaps: Vec<Vec<Detection>> = (0..8)
            .map(|s| {
                let t = s as f64 * 4e-4;
                vec![det(t, 100.0 + 0.3 * s as f64, 1.0), det(t, 102.0 - 0.3 * s as f64, 0.5)]
            })
            .collect();
        let tracks = track_short(&snaps, &ShortTrackConfig::default());
        assert_eq!(tracks.len(), 2);
        for tr in &tracks {
            assert!(tr.full_lifetime);
            let a0 = tr.detections[0].1.amplitude;
            assert!(tr.detections.iter().all(|(_, d)| d.amplitude == a0));
        }
    }

    #[test]
    fn late_start_is_not_full_lifetime() {
        let snaps: Vec<Vec<Detection>> =
            (0..8).map(|s| if s < 2 { vec![] } else { vec![det(s as f64 * 4e-4, 80.0, 1.0)] }).collect();
        let t = track_short(&snaps, &ShortTrackConfig::default());
        assert_eq!(t.len(), 1);
        assert!(!t[0].full_lifetime);
    }
}
