//! Lifetimes, excess delays and relative Dopplers of newborn tracks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::sets::SetStats;
use crate::extract::{TrackDb, TrackPoint};
use crate::sim::C0;
use crate::stats::{CensoredSample, Observation};

/// Default resolution guard in delay bins: tracks closer than this are not
/// reliably told apart.
pub const DEFAULT_GUARD_BINS: f64 = 2.0;

/// Sets a lost path is looked for before a new track is taken as its
/// continuation.
pub const DEFAULT_LOOKBACK_SETS: usize = 10;

/// How tracks broken at crossings are recognised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    /// Delay guard in bins; 0 disables crossing handling.
    pub bins: f64,
    pub lookback_sets: usize,
    /// Censor a lifetime whose end a continuation picks up.
    pub censor_continued: bool,
}

impl Default for Guard {
    fn default() -> Self {
        Guard { bins: DEFAULT_GUARD_BINS, lookback_sets: DEFAULT_LOOKBACK_SETS, censor_continued: true }
    }
}

/// Negative excess delays within this distance of zero are set to zero,
/// ns; larger negative values are discarded.
pub const NEGATIVE_DELAY_TOLERANCE_NS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeSample {
    pub track: u64,
    /// Distance at birth, m.
    pub d: f64,
    /// Lifetime in sets, `Ψ`.
    pub sets: usize,
    /// Relative travel per set over the track's life, `T_r·v̄_sum`, m.
    pub step_m: f64,
    /// The track was still alive when observation stopped.
    pub censored: bool,
}

impl LifetimeSample {
    /// `Y = Ψ·T_r·v̄_sum`, m.
    pub fn y(&self) -> f64 {
        self.sets as f64 * self.step_m
    }

    /// Likelihood term: the true lifetime lies in `[Ψδ, (Ψ+1)δ)`, or is at
    /// least `Ψδ` when censored. Single-set tracks are left out of fits,
    /// so every sample is truncated at one step.
    pub fn censored_sample(&self) -> CensoredSample {
        let lo = self.y();
        let obs =
            if self.censored { Observation::RightCensored(lo) } else { Observation::Interval(lo, lo + self.step_m) };
        CensoredSample { obs, truncation: self.step_m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySample {
    pub track: u64,
    pub d: f64,
    pub excess_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerSample {
    pub track: u64,
    pub d: f64,
    /// Signed `ν / ((f_c/c0) v_sum)`.
    pub relative: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    pub lifetimes: Vec<LifetimeSample>,
    pub excess_delays: Vec<DelaySample>,
    pub rel_dopplers: Vec<DopplerSample>,
    /// Newborns whose LOS delay came from the geometry because no LOS
    /// track was identified in the birth set.
    pub geometric_los: usize,
    /// Newborns discarded for a clearly negative excess delay.
    pub negative_delays: usize,
    /// Tracks not counted as newborn because they start where another
    /// track was just lost.
    pub guarded_starts: usize,
}

impl SampleTable {
    pub fn merge(&mut self, other: SampleTable) {
        self.lifetimes.extend(other.lifetimes);
        self.excess_delays.extend(other.excess_delays);
        self.rel_dopplers.extend(other.rel_dopplers);
        self.geometric_los += other.geometric_los;
        self.negative_delays += other.negative_delays;
        self.guarded_starts += other.guarded_starts;
    }

    /// Lifetimes usable for fitting (`Ψ ≥ 1`).
    pub fn fit_lifetimes(&self) -> Vec<CensoredSample> {
        self.lifetimes.iter().filter(|l| l.sets > 0).map(LifetimeSample::censored_sample).collect()
    }

    /// Uncensored lifetimes in metres, `Ψ ≥ 1`.
    pub fn lifetime_values(&self) -> Vec<f64> {
        self.lifetimes.iter().filter(|l| l.sets > 0 && !l.censored).map(LifetimeSample::y).collect()
    }

    pub fn single_set_tracks(&self) -> usize {
        self.lifetimes.iter().filter(|l| l.sets == 0).count()
    }

    /// Excess delays above `floor_ns` (strictly positive when the floor is 0).
    pub fn delay_values(&self, floor_ns: f64) -> Vec<f64> {
        self.excess_delays.iter().map(|s| s.excess_ns).filter(|&x| x > floor_ns && x > 0.0).collect()
    }

    /// Non-zero relative Doppler magnitudes.
    pub fn doppler_values(&self) -> Vec<f64> {
        self.rel_dopplers.iter().map(|s| s.relative.abs()).filter(|&x| x > 0.0).collect()
    }

    /// Fraction of relative Dopplers with a positive sign.
    pub fn positive_doppler_share(&self) -> Option<f64> {
        let n = self.rel_dopplers.iter().filter(|s| s.relative != 0.0).count();
        (n > 0).then(|| self.rel_dopplers.iter().filter(|s| s.relative > 0.0).count() as f64 / n as f64)
    }
}

/// `τˣ = τ̄ - τ_LOS`, with small negatives clamped to zero.
pub fn excess_delay(delay_ns: f64, los_ns: f64) -> Option<f64> {
    let x = delay_ns - los_ns;
    if x >= 0.0 {
        Some(x)
    } else if x >= -NEGATIVE_DELAY_TOLERANCE_NS {
        Some(0.0)
    } else {
        None
    }
}

/// `νⁿ = ν / ((f_c/c0) v_sum)`.
pub fn relative_doppler(doppler_hz: f64, carrier: f64, v_sum: f64) -> f64 {
    doppler_hz / (carrier / C0 * v_sum)
}

/// Track points of each set, for proximity queries.
struct Neighbours<'a> {
    by_set: HashMap<usize, Vec<(u64, f64)>>,
    /// Last point of every track, by the set it ends in.
    ends: HashMap<usize, Vec<(u64, TrackPoint)>>,
    /// First point of every track, by the set it starts in.
    starts: HashMap<usize, Vec<(u64, TrackPoint)>>,
    carrier: f64,
    guard_ns: f64,
    guard: Guard,
    db: &'a TrackDb,
}

impl<'a> Neighbours<'a> {
    fn new(db: &'a TrackDb, guard: Guard) -> Self {
        let mut by_set: HashMap<usize, Vec<(u64, f64)>> = HashMap::new();
        let mut ends: HashMap<usize, Vec<(u64, TrackPoint)>> = HashMap::new();
        let mut starts: HashMap<usize, Vec<(u64, TrackPoint)>> = HashMap::new();
        for tr in &db.tracks {
            for p in &tr.points {
                by_set.entry(p.set).or_default().push((tr.id, p.delay_ns));
            }
            ends.entry(tr.last_set()).or_default().push((tr.id, tr.points[tr.points.len() - 1]));
            starts.entry(tr.first_set()).or_default().push((tr.id, tr.points[0]));
        }
        let guard_ns = guard.bins * 1e9 / db.meta.bandwidth;
        Neighbours { by_set, ends, starts, carrier: db.meta.config.carrier, guard_ns, guard, db }
    }

    /// Whether `later` lies within the guard of where the path lost at
    /// `earlier` would be.
    fn links(&self, earlier: &TrackPoint, later: &TrackPoint) -> bool {
        let ahead = earlier.delay_ns - earlier.doppler_hz / self.carrier * (later.t - earlier.t) * 1e9;
        (ahead - later.delay_ns).abs() < self.guard_ns
    }

    fn near(&self, set: usize, delay_ns: f64, id: u64, guard_ns: f64) -> bool {
        self.by_set.get(&set).is_some_and(|v| v.iter().any(|&(k, d)| k != id && (d - delay_ns).abs() < guard_ns))
    }

    /// Whether a track that ended within the lookback before `p` links to it.
    fn continues(&self, p: &TrackPoint, id: u64) -> bool {
        (p.set.saturating_sub(self.guard.lookback_sets)..p.set)
            .any(|set| self.ends.get(&set).is_some_and(|v| v.iter().any(|(k, q)| *k != id && self.links(q, p))))
    }

    /// Whether a track starting within the lookback after `q` links to it.
    fn continued(&self, q: &TrackPoint, id: u64) -> bool {
        (q.set + 1..=q.set + self.guard.lookback_sets)
            .any(|set| self.starts.get(&set).is_some_and(|v| v.iter().any(|(k, p)| *k != id && self.links(q, p))))
    }

    /// First point of `tr` at which another track comes within the guard,
    /// in the same set or, after propagation, in the next one.
    fn first_contact(&self, tr: &crate::extract::Track) -> Option<usize> {
        let guard_ns = self.guard_ns;
        tr.points.iter().position(|p| {
            if self.near(p.set, p.delay_ns, tr.id, guard_ns) {
                return true;
            }
            let Some(next) = self.db.set(p.set + 1) else { return false };
            let ahead = p.delay_ns
                - p.doppler_hz / self.carrier * (next.t0 - self.db.set(p.set).map_or(next.t0, |s| s.t0)) * 1e9;
            self.near(p.set + 1, ahead, tr.id, guard_ns)
        })
    }
}

/// Samples of every newborn track: one that starts in a birth-counting set
/// and is not the LOS there.
///
/// Paths closer than the guard cannot be told apart, so tracks break where
/// paths cross. A track starting where another track, propagated with its
/// Doppler, would be up to the lookback later is taken as its continuation,
/// not a birth. A lifetime is censored
/// at the first set where another track comes within the guard, since from
/// there on its end may be a crossing rather than a death, and at an end
/// that such a continuation picks up. `stats` must come from
/// [`super::set_stats`] on the same database.
pub fn sample_table(db: &TrackDb, stats: &[SetStats], guard: Guard) -> SampleTable {
    let carrier = db.meta.config.carrier;
    let t_r = db.meta.set_period;
    let active = guard.bins > 0.0;
    let pos = |set: usize| db.sets.binary_search_by_key(&set, |s| s.index).ok();
    let nb = Neighbours::new(db, guard);
    let mut out = SampleTable::default();
    for tr in &db.tracks {
        let Some(k) = pos(tr.first_set()) else { continue };
        let (info, st) = (&db.sets[k], &stats[k]);
        if !st.counts_births() || info.los_track == Some(tr.id) {
            continue;
        }
        let birth = tr.points[0];
        if active && nb.continues(&birth, tr.id) {
            out.guarded_starts += 1;
            continue;
        }
        let contact = if active { nb.first_contact(tr) } else { None };
        let (last, censored) = match contact {
            Some(c) => (tr.points[c].set, true),
            None => (
                tr.last_set(),
                active && guard.censor_continued && nb.continued(&tr.points[tr.points.len() - 1], tr.id),
            ),
        };
        let Some(end) = pos(last) else { continue };
        let span = &db.sets[k..=end];
        let v_mean = span.iter().map(|s| s.v_sum()).sum::<f64>() / span.len() as f64;
        out.lifetimes.push(LifetimeSample {
            track: tr.id,
            d: info.d,
            sets: last - tr.first_set(),
            step_m: t_r * v_mean,
            censored: censored || stats[end].end_censored,
        });
        let los = info.los_delay_ns.unwrap_or_else(|| {
            out.geometric_los += 1;
            info.d / C0 * 1e9
        });
        match excess_delay(birth.delay_ns, los) {
            Some(x) => out.excess_delays.push(DelaySample { track: tr.id, d: info.d, excess_ns: x }),
            None => out.negative_delays += 1,
        }
        out.rel_dopplers.push(DopplerSample {
            track: tr.id,
            d: info.d,
            relative: relative_doppler(birth.doppler_hz, carrier, info.v_sum()),
        });
    }
    if out.negative_delays > 0 {
        log::warn!("{} newborn tracks precede the LOS and were discarded", out.negative_delays);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::set_stats;
    use crate::analysis::testutil::db_with;

    #[test]
    fn lifetime_in_metres() {
        let l = LifetimeSample { track: 1, d: 0.0, sets: 40, step_m: 0.05 * 25.0, censored: false };
        assert!((l.y() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn excess_delay_subtracts_the_los() {
        assert_eq!(excess_delay(1667.0, 1667.0), Some(0.0));
        assert!((excess_delay(1700.0, 1667.0).unwrap() - 33.0).abs() < 1e-12);
        assert_eq!(excess_delay(1666.7, 1667.0), Some(0.0));
        assert_eq!(excess_delay(1660.0, 1667.0), None);
    }

    #[test]
    fn relative_doppler_normalises_by_the_speed() {
        let r = relative_doppler(500.0, 5.7e9, 26.32);
        assert!((r - 0.9992).abs() < 1e-3, "{r}");
        assert_eq!(relative_doppler(0.0, 5.7e9, 26.32), 0.0);
    }

    #[test]
    fn newborns_skip_first_set_and_los() {
        let mut db = db_with(&[(0, 5), (2, 4), (3, 9)], 10, 20.0);
        db.sets[3].los_track = Some(3);
        db.sets[2].los_delay_ns = Some(300.0);
        let st = set_stats(&db, false);
        let t = sample_table(&db, &st, Guard { bins: 0.0, ..Guard::default() });
        assert_eq!(t.lifetimes.len(), 1);
        assert_eq!(t.lifetimes[0].track, 2);
        assert_eq!(t.lifetimes[0].sets, 2);
        assert!(!t.lifetimes[0].censored);
        assert!((t.excess_delays[0].excess_ns - 100.0).abs() < 1e-9);
    }

    #[test]
    fn track_alive_at_the_end_is_censored() {
        let db = db_with(&[(2, 9)], 10, 20.0);
        let t = sample_table(&db, &set_stats(&db, false), Guard { bins: 0.0, ..Guard::default() });
        assert!(t.lifetimes[0].censored);
        assert!(matches!(t.lifetimes[0].censored_sample().obs, Observation::RightCensored(_)));
    }
}
