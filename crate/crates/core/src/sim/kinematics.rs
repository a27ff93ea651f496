use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const C0: f64 = 299_792_458.0;

pub fn kmh(v: f64) -> f64 {
    v / 3.6
}

/// Constant-speed two-vehicle geometry.
///
/// Closing runs: the distance shrinks at `v_tx + v_rx` down to
/// `min_distance`, then opens again at the same rate. With
/// `min_distance == 0` the run ends when the vehicles meet.
/// Non-closing runs hold `d0` with an optional constant `drift` (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub v_tx: f64,
    pub v_rx: f64,
    pub d0: f64,
    pub closing: bool,
    #[serde(default)]
    pub min_distance: f64,
    #[serde(default)]
    pub drift: f64,
    /// The receiver is roadside infrastructure: it is exempt from the
    /// minimum-speed rule that applies to vehicles.
    #[serde(default)]
    pub rx_infrastructure: bool,
}

impl Kinematics {
    pub fn oncoming(v_tx: f64, v_rx: f64, d0: f64, min_distance: f64) -> Self {
        Kinematics { v_tx, v_rx, d0, closing: true, min_distance, drift: 0.0, rx_infrastructure: false }
    }

    pub fn convoy(v_tx: f64, v_rx: f64, d0: f64, drift: f64) -> Self {
        Kinematics { v_tx, v_rx, d0, closing: false, min_distance: 0.0, drift, rx_infrastructure: false }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("v_tx", self.v_tx), ("v_rx", self.v_rx), ("d0", self.d0), ("min_distance", self.min_distance)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    format!("kinematics.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !self.drift.is_finite() {
            return Err(Error::validation("kinematics.drift", "must be finite"));
        }
        if self.d0 <= 0.0 {
            return Err(Error::validation("kinematics.d0", "initial distance must be > 0"));
        }
        if self.closing && self.min_distance > self.d0 {
            return Err(Error::validation("kinematics.min_distance", "exceeds the initial distance"));
        }
        Ok(())
    }

    /// Sum of the two speeds; the relative travel rate used for births and
    /// lifetimes.
    pub fn v_sum(&self) -> f64 {
        self.v_tx + self.v_rx
    }

    pub fn distance(&self, t: f64) -> f64 {
        if self.closing {
            let m = self.min_distance;
            m + (self.d0 - m - self.v_sum() * t).abs()
        } else {
            (self.d0 + self.drift * t).max(0.0)
        }
    }

    /// Time derivative of the distance.
    pub fn range_rate(&self, t: f64) -> f64 {
        if self.closing {
            let m = self.min_distance;
            if self.d0 - m - self.v_sum() * t > 0.0 {
                -self.v_sum()
            } else {
                self.v_sum()
            }
        } else if self.d0 + self.drift * t > 0.0 {
            self.drift
        } else {
            0.0
        }
    }

    /// Time at which the vehicles meet, if they do.
    pub fn meeting_time(&self) -> Option<f64> {
        if self.closing && self.min_distance == 0.0 && self.v_sum() > 0.0 {
            Some(self.d0 / self.v_sum())
        } else if !self.closing && self.drift < 0.0 {
            Some(self.d0 / -self.drift)
        } else {
            None
        }
    }

    /// Time at which a closing run reaches its minimum distance and starts
    /// opening again.
    pub fn reversal_time(&self) -> Option<f64> {
        (self.closing && self.min_distance > 0.0 && self.v_sum() > 0.0)
            .then(|| (self.d0 - self.min_distance) / self.v_sum())
    }

    /// Whether births are counted under the minimum-speed rule.
    pub fn above_min_speed(&self, min_speed: f64) -> bool {
        self.v_tx >= min_speed && (self.rx_infrastructure || self.v_rx >= min_speed)
    }

    /// Maximum geometric Doppler `(f_c/c0)(v_tx + v_rx)`.
    pub fn max_doppler(&self, carrier: f64) -> f64 {
        carrier / C0 * self.v_sum()
    }
}

/// Timing and kinematics of one recording set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetPlan {
    pub index: usize,
    pub t0: f64,
    pub d: f64,
    pub v_tx: f64,
    pub v_rx: f64,
    pub snapshot_times: Vec<f64>,
}

impl SetPlan {
    pub fn v_sum(&self) -> f64 {
        self.v_tx + self.v_rx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub set_period: f64,
    pub sets: Vec<SetPlan>,
}

/// Set start times at spacing `set_period` over `duration`, truncated before
/// the vehicles meet.
pub fn plan_sets(
    kin: &Kinematics,
    duration: f64,
    set_period: f64,
    snapshots: usize,
    snapshot_interval: f64,
) -> Vec<SetPlan> {
    let mut n = (duration / set_period + 1e-9).floor() as usize;
    if let Some(t_meet) = kin.meeting_time() {
        let last = t_meet - (snapshots.saturating_sub(1)) as f64 * snapshot_interval;
        let allowed = if last <= 0.0 { 0 } else { ((last / set_period) - 1e-12).ceil() as usize };
        n = n.min(allowed);
    }
    (0..n)
        .map(|i| {
            let t0 = i as f64 * set_period;
            SetPlan {
                index: i,
                t0,
                d: kin.distance(t0),
                v_tx: kin.v_tx,
                v_rx: kin.v_rx,
                snapshot_times: (0..snapshots).map(|s| t0 + s as f64 * snapshot_interval).collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passing_geometry() {
        let k = Kinematics::oncoming(20.0, 20.0, 500.0, 10.0);
        assert_eq!(k.distance(0.0), 500.0);
        assert!((k.distance(12.25) - 10.0).abs() < 1e-9);
        assert!((k.distance(13.25) - 50.0).abs() < 1e-9);
        assert_eq!(k.range_rate(1.0), -40.0);
        assert_eq!(k.range_rate(13.0), 40.0);
    }

    #[test]
    fn run_stops_before_meeting() {
        let k = Kinematics::oncoming(15.0, 15.0, 20.0, 0.0);
        let sets = plan_sets(&k, 5.0, 0.05, 10, 0.5e-3);
        let last = sets.last().unwrap();
        assert!(*last.snapshot_times.last().unwrap() <= 20.0 / 30.0);
        assert!(sets.len() < 100);
        assert!(sets.iter().all(|s| s.d > 0.0));
    }

    #[test]
    fn set_count_arithmetic() {
        let k = Kinematics::convoy(20.0, 20.0, 50.0, 0.0);
        assert_eq!(plan_sets(&k, 1.0, 0.05, 8, 0.5e-3).len(), 20);
        assert_eq!(plan_sets(&k, 16.0, 0.01, 8, 0.5e-3).len(), 1600);
    }

    #[test]
    fn speed_exclusion() {
        let mut k = Kinematics::convoy(kmh(1.0), kmh(60.0), 50.0, 0.0);
        assert!(!k.above_min_speed(kmh(5.0)));
        k.v_tx = kmh(60.0);
        k.v_rx = 0.0;
        assert!(!k.above_min_speed(kmh(5.0)));
        k.rx_infrastructure = true;
        assert!(k.above_min_speed(kmh(5.0)));
    }
}
