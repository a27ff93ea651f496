//! Per-set track counts and the newborn-rate windows built from them.

use serde::{Deserialize, Serialize};

use crate::extract::TrackDb;

/// Vehicles slower than this (5 km/h) are excluded from birth statistics.
pub const MIN_SPEED: f64 = 5.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetStats {
    pub index: usize,
    pub d: f64,
    pub v_sum: f64,
    /// Tracks alive in this set.
    pub p: usize,
    /// Tracks whose first set is this one.
    pub p_b: usize,
    /// Both vehicles move fast enough for the set to enter birth statistics.
    pub moving: bool,
    /// A track starting here is a genuine birth: not the first set of the
    /// run, of a contiguous stretch, or of the opening leg after a pass.
    pub births_valid: bool,
    /// A track ending here may have been cut by the observation rather
    /// than by the path dying.
    pub end_censored: bool,
}

impl SetStats {
    pub fn counts_births(&self) -> bool {
        self.moving && self.births_valid
    }
}

/// Sets at which the distance stops shrinking and starts growing.
fn reversals(db: &TrackDb) -> Vec<usize> {
    let s = &db.sets;
    (1..s.len().saturating_sub(1))
        .filter(|&k| {
            s[k - 1].index + 1 == s[k].index
                && s[k].index + 1 == s[k + 1].index
                && s[k].d <= s[k - 1].d
                && s[k].d < s[k + 1].d
        })
        .collect()
}

/// `P[i]` and `P_b[i]` for every set of the database, plus the censoring
/// flags used by the sample extraction.
///
/// The Doppler of every path changes sign when the vehicles pass each
/// other, so tracks rarely survive the pass. Tracks ending within one set
/// of it are treated as censored and tracks starting within one set after
/// it are not counted as births.
pub fn set_stats(db: &TrackDb, rx_infrastructure: bool) -> Vec<SetStats> {
    let n = db.sets.len();
    let mut p = vec![0usize; n];
    let mut p_b = vec![0usize; n];
    for tr in &db.tracks {
        let (a, b) = (tr.first_set(), tr.last_set());
        let Ok(k) = db.sets.binary_search_by_key(&a, |s| s.index) else { continue };
        p_b[k] += 1;
        for slot in p.iter_mut().skip(k).take(b - a + 1) {
            *slot += 1;
        }
    }
    let mut out: Vec<SetStats> = db
        .sets
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let first = k == 0 || db.sets[k - 1].index + 1 != s.index;
            let last = k + 1 == n || s.index + 1 != db.sets[k + 1].index;
            SetStats {
                index: s.index,
                d: s.d,
                v_sum: s.v_sum(),
                p: p[k],
                p_b: p_b[k],
                moving: s.v_tx >= MIN_SPEED && (rx_infrastructure || s.v_rx >= MIN_SPEED),
                births_valid: !first,
                end_censored: last,
            }
        })
        .collect();
    for k in reversals(db) {
        out[k - 1].end_censored = true;
        out[k].end_censored = true;
        out[k].births_valid = false;
        out[k + 1].births_valid = false;
    }
    out
}

/// Newborn count over `sets` consecutive sets covering about one metre of
/// relative travel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthWindow {
    /// Running window number, the metre index.
    pub meter: usize,
    pub first_set: usize,
    pub sets: usize,
    /// Mean distance over the window, m.
    pub d: f64,
    /// Relative travel covered by the window, m.
    pub travel: f64,
    /// Newborn tracks in the window.
    pub r: usize,
}

/// Sets per metre of relative travel, at least one.
pub fn sets_per_meter(set_period: f64, v_sum: f64) -> usize {
    ((1.0 / (set_period * v_sum)).round() as usize).max(1)
}

/// Group consecutive birth-counting sets into windows of
/// `round(1 m / (T_r v_sum))` sets and sum their newborn counts. A window
/// never spans an excluded set; a stretch that does not fill its last
/// window contributes a shorter one, so the newborn total is preserved.
pub fn birth_rate(stats: &[SetStats], set_period: f64) -> Vec<BirthWindow> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < stats.len() {
        if !stats[k].counts_births() || stats[k].v_sum <= 0.0 {
            k += 1;
            continue;
        }
        let width = sets_per_meter(set_period, stats[k].v_sum);
        let mut end = k;
        while end < stats.len()
            && end - k < width
            && stats[end].counts_births()
            && (end == k || stats[end - 1].index + 1 == stats[end].index)
        {
            end += 1;
        }
        let w = &stats[k..end];
        out.push(BirthWindow {
            meter: out.len(),
            first_set: stats[k].index,
            sets: w.len(),
            d: w.iter().map(|s| s.d).sum::<f64>() / w.len() as f64,
            travel: w.iter().map(|s| s.v_sum * set_period).sum(),
            r: w.iter().map(|s| s.p_b).sum(),
        });
        k = end;
    }
    if out.is_empty() {
        log::warn!("no set qualifies for birth statistics");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::testutil::db_with;

    #[test]
    fn one_track_spanning_three_to_seven() {
        let st = set_stats(&db_with(&[(3, 7)], 10, 20.0), false);
        assert_eq!(st[3].p_b, 1);
        assert!(st[3..=7].iter().all(|s| s.p == 1));
        assert_eq!(st[8].p, 0);
        assert_eq!(st.iter().map(|s| s.p_b).sum::<usize>(), 1);
    }

    #[test]
    fn two_births_in_one_set() {
        let st = set_stats(&db_with(&[(2, 4), (2, 9)], 10, 20.0), false);
        assert_eq!(st[2].p_b, 2);
    }

    #[test]
    fn one_set_per_meter_at_twenty_m_per_s() {
        assert_eq!(sets_per_meter(0.05, 20.0), 1);
        assert_eq!(sets_per_meter(0.01, 20.0), 5);
    }

    #[test]
    fn windows_sum_newborns() {
        let mut st = set_stats(&db_with(&[(1, 2), (1, 3), (2, 5), (3, 3), (3, 4), (3, 5)], 4, 20.0), false);
        for s in st.iter_mut() {
            s.v_sum = 20.0 / 3.0;
        }
        let w = birth_rate(&st, 0.05);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].first_set, w[0].sets, w[0].r), (1, 3, 6));
    }

    #[test]
    fn slow_vehicle_excludes_the_set() {
        let mut db = db_with(&[(2, 3)], 6, 20.0);
        for s in db.sets.iter_mut() {
            s.v_tx = 1.0 / 3.6;
        }
        let st = set_stats(&db, false);
        assert!(st.iter().all(|s| !s.moving));
        assert!(birth_rate(&st, 0.05).is_empty());
        let st = set_stats(&db, true);
        assert!(st.iter().all(|s| !s.moving));
    }

    #[test]
    fn infrastructure_receiver_is_exempt() {
        let mut db = db_with(&[(2, 3)], 6, 20.0);
        for s in db.sets.iter_mut() {
            s.v_tx = 20.0;
            s.v_rx = 0.0;
        }
        assert!(set_stats(&db, true)[2].moving);
        assert!(!set_stats(&db, false)[2].moving);
    }

    #[test]
    fn pass_censors_its_neighbourhood() {
        let mut db = db_with(&[], 9, 20.0);
        for (k, s) in db.sets.iter_mut().enumerate() {
            s.d = 10.0 + (k as f64 - 4.0).abs();
        }
        let st = set_stats(&db, false);
        assert!(st[3].end_censored && st[4].end_censored && !st[5].end_censored);
        assert!(!st[4].births_valid && !st[5].births_valid && st[6].births_valid && st[3].births_valid);
    }
}
