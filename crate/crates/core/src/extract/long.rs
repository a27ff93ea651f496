//! Chaining of per-set path estimates into tracks across sets.

use serde::{Deserialize, Serialize};

/// Default delay gate for matching across the set gap, ns.
pub const DEFAULT_CHI_NS: f64 = 2.0;

/// A full-lifetime short track reduced to one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub set: usize,
    /// Mean snapshot time of the short track, seconds.
    pub t: f64,
    pub amplitude: f64,
    pub delay_ns: f64,
    pub doppler_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    /// One point per set, consecutive set indices.
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn first_set(&self) -> usize {
        self.points[0].set
    }

    pub fn last_set(&self) -> usize {
        self.points[self.points.len() - 1].set
    }

    /// Lifetime in sets, `Ψ = I - i_start`.
    pub fn lifetime_sets(&self) -> usize {
        self.last_set() - self.first_set()
    }

    pub fn point_at(&self, set: usize) -> Option<&TrackPoint> {
        set.checked_sub(self.first_set()).and_then(|k| self.points.get(k))
    }
}

/// Incremental long-term tracker; feed sets in increasing order.
#[derive(Debug, Clone)]
pub struct LongTracker {
    carrier: f64,
    chi_ns: f64,
    active: Vec<Track>,
    done: Vec<Track>,
    next_id: u64,
    last_set: Option<usize>,
}

impl LongTracker {
    pub fn new(carrier: f64, chi_ns: f64) -> Self {
        LongTracker { carrier, chi_ns, active: Vec::new(), done: Vec::new(), next_id: 1, last_set: None }
    }

    /// Delay of `p` propagated by `dt` seconds with its own Doppler.
    fn propagate(&self, p: &TrackPoint, dt: f64) -> f64 {
        p.delay_ns - p.doppler_hz / self.carrier * dt * 1e9
    }

    /// Match the points of `set` against tracks that reached the previous
    /// set. Points are taken strongest first; each claims the open track
    /// whose forward prediction to the new point and backward prediction
    /// from it both fall within `χ`, preferring the smallest total error.
    pub fn push_set(&mut self, set: usize, mut points: Vec<TrackPoint>) {
        if self.last_set.is_some_and(|l| l + 1 != set) {
            self.done.append(&mut self.active);
        }
        self.last_set = Some(set);
        points.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude).then(a.delay_ns.total_cmp(&b.delay_ns)));
        let mut open: Vec<Option<Track>> = std::mem::take(&mut self.active).into_iter().map(Some).collect();
        let mut next = Vec::with_capacity(points.len());
        for p in points {
            let mut best: Option<(usize, f64)> = None;
            for (k, tr) in open.iter().enumerate() {
                let Some(tr) = tr else { continue };
                let q = tr.points[tr.points.len() - 1];
                let dt = p.t - q.t;
                let fwd = (self.propagate(&q, dt) - p.delay_ns).abs();
                let bwd = (self.propagate(&p, -dt) - q.delay_ns).abs();
                if fwd < self.chi_ns && bwd < self.chi_ns {
                    let cost = fwd + bwd;
                    if best.is_none_or(|(_, c)| cost < c) {
                        best = Some((k, cost));
                    }
                }
            }
            match best {
                Some((k, _)) => {
                    let mut tr = open[k].take().expect("open track");
                    tr.points.push(p);
                    next.push(tr);
                }
                None => {
                    next.push(Track { id: self.next_id, points: vec![p] });
                    self.next_id += 1;
                }
            }
        }
        self.done.extend(open.into_iter().flatten());
        next.sort_by_key(|t| t.id);
        self.active = next;
    }

    /// Tracks still open at the most recent set.
    pub fn active(&self) -> &[Track] {
        &self.active
    }

    /// All tracks, ordered by id.
    pub fn finish(mut self) -> Vec<Track> {
        self.done.append(&mut self.active);
        self.done.sort_by_key(|t| t.id);
        self.done
    }
}

/// Batch form of [`LongTracker`].
pub fn track_long(sets: Vec<(usize, Vec<TrackPoint>)>, carrier: f64, chi_ns: f64) -> Vec<Track> {
    let mut tr = LongTracker::new(carrier, chi_ns);
    for (s, pts) in sets {
        tr.push_set(s, pts);
    }
    tr.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FC: f64 = 5.7e9;

    fn pt(set: usize, t: f64, a: f64, delay: f64, nu: f64) -> TrackPoint {
        TrackPoint { set, t, amplitude: a, delay_ns: delay, doppler_hz: nu }
    }

    fn moving(set: usize, tr: f64, d0: f64, nu: f64, a: f64) -> TrackPoint {
        let t = set as f64 * tr;
        pt(set, t, a, d0 - nu / FC * t * 1e9, nu)
    }

    #[test]
    fn one_path_ten_sets_is_one_track() {
        let sets = (0..10).map(|i| (i, vec![moving(i, 0.05, 300.0, 1000.0, 1.0)])).collect();
        let tracks = track_long(sets, FC, DEFAULT_CHI_NS);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].lifetime_sets(), 9);
    }

    #[test]
    fn missing_set_splits_the_track() {
        let sets =
            (0..10).map(|i| (i, if i == 4 { vec![] } else { vec![moving(i, 0.01, 300.0, 200.0, 1.0)] })).collect();
        let tracks = track_long(sets, FC, DEFAULT_CHI_NS);
        assert_eq!(tracks.len(), 2);
        assert_eq!((tracks[0].first_set(), tracks[0].last_set()), (0, 3));
        assert_eq!((tracks[1].first_set(), tracks[1].last_set()), (5, 9));
    }

    #[test]
    fn parallel_paths_keep_identity() {
        let sets = (0..30)
            .map(|i| (i, vec![moving(i, 0.01, 300.0, 400.0, 1.0), moving(i, 0.01, 310.0, 410.0, 0.9)]))
            .collect();
        let tracks = track_long(sets, FC, DEFAULT_CHI_NS);
        assert_eq!(tracks.len(), 2);
        for t in &tracks {
            assert_eq!(t.points.len(), 30);
            let a = t.points[0].amplitude;
            assert!(t.points.iter().all(|p| p.amplitude == a));
        }
    }
}
