use serde::{Deserialize, Serialize};

use super::kinematics::Kinematics;
use crate::error::{Error, Result};
use crate::scenario::ScenarioModel;
use crate::stats::DistSpec;

pub const DEFAULT_BANDWIDTH: f64 = 1e9;
pub const DEFAULT_CARRIER: f64 = 5.7e9;
pub const DEFAULT_DECAY_NS: f64 = 100.0;
pub const DEFAULT_SHADOWING_DB: f64 = 3.0;
/// Bins of the delay grid placed before the LOS delay.
pub const DEFAULT_GUARD_BINS: usize = 16;
/// Vehicles slower than this (5 km/h) count no births.
pub const MIN_SPEED: f64 = 5.0 / 3.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: ScenarioModel,
    pub kinematics: Kinematics,
    /// Run length in seconds.
    pub duration: f64,
    /// Recording set period `T_r` in seconds.
    pub set_period: f64,
    pub snapshots_per_set: usize,
    /// Spacing of snapshots inside a set, seconds.
    pub snapshot_interval: f64,
    pub bandwidth: f64,
    pub carrier: f64,
    /// Delay grid length `U`; chosen from the excess-delay law when absent.
    pub delay_bins: Option<usize>,
    pub guard_bins: usize,
    /// Per-bin complex noise power in dB; `None` synthesises noiseless data.
    pub noise_floor_db: Option<f64>,
    pub amplitude_decay_ns: f64,
    pub shadowing_db: f64,
    /// Probability that an MPC's Doppler has the sign of the LOS Doppler.
    /// Defaults to 1 for oncoming scenarios and 0.5 for convoys.
    pub p_toward: Option<f64>,
    /// Rescale the birth rate so the expected alive count follows the
    /// number-of-MPCs law.
    pub calibrate: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(scenario: ScenarioModel, kinematics: Kinematics, duration: f64, seed: u64) -> Self {
        SimConfig {
            scenario,
            kinematics,
            duration,
            set_period: 0.01,
            snapshots_per_set: 8,
            snapshot_interval: 0.5e-3,
            bandwidth: DEFAULT_BANDWIDTH,
            carrier: DEFAULT_CARRIER,
            delay_bins: None,
            guard_bins: DEFAULT_GUARD_BINS,
            noise_floor_db: Some(-140.0),
            amplitude_decay_ns: DEFAULT_DECAY_NS,
            shadowing_db: DEFAULT_SHADOWING_DB,
            p_toward: None,
            calibrate: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.kinematics.validate()?;
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return cfg(format!("duration must be > 0 s, got {}", self.duration));
        }
        if !(0.01 - 1e-12..=0.1 + 1e-12).contains(&self.set_period) {
            return cfg(format!("set period must lie in [10, 100] ms, got {} ms", self.set_period * 1e3));
        }
        if !(6..=13).contains(&self.snapshots_per_set) {
            return cfg(format!("snapshots per set must lie in 6..=13, got {}", self.snapshots_per_set));
        }
        if !(0.2e-3 - 1e-12..=0.7e-3 + 1e-12).contains(&self.snapshot_interval) {
            return cfg(format!(
                "snapshot interval must lie in [0.2, 0.7] ms, got {} ms",
                self.snapshot_interval * 1e3
            ));
        }
        if self.snapshot_interval * self.snapshots_per_set as f64 >= self.set_period {
            return cfg("snapshot interval times snapshot count must be shorter than the set period".into());
        }
        for (name, v) in
            [("bandwidth", self.bandwidth), ("carrier", self.carrier), ("amplitude_decay_ns", self.amplitude_decay_ns)]
        {
            if !(v.is_finite() && v > 0.0) {
                return cfg(format!("{name} must be finite and > 0"));
            }
        }
        if !(self.shadowing_db.is_finite() && self.shadowing_db >= 0.0) {
            return cfg("shadowing_db must be >= 0".into());
        }
        if let Some(p) = self.p_toward {
            if !(0.0..=1.0).contains(&p) {
                return cfg(format!("p_toward must be a probability, got {p}"));
            }
        }
        if let Some(nf) = self.noise_floor_db {
            if !nf.is_finite() {
                return cfg("noise floor must be finite".into());
            }
        }
        let need = self.min_delay_bins();
        match self.delay_bins {
            Some(u) if u < 64 => cfg(format!("delay grid needs at least 64 bins, got {u}")),
            Some(u) if u <= need.saturating_sub(self.guard_bins) => cfg(format!(
                "delay grid of {u} bins does not cover the 99.9% excess-delay quantile ({} bins needed)",
                need
            )),
            _ => Ok(()),
        }
    }

    pub fn bin_ns(&self) -> f64 {
        1e9 / self.bandwidth
    }

    fn excess_quantile_ns(&self, p: f64) -> f64 {
        let e = self.scenario.excess_delay;
        DistSpec::log_normal(e.psi, e.rho).map(|s| s.quantile(p)).unwrap_or(0.0)
    }

    /// Bins needed to hold the guard plus the 99.9% excess-delay quantile.
    pub fn min_delay_bins(&self) -> usize {
        self.guard_bins + (self.excess_quantile_ns(0.999) / self.bin_ns()).ceil() as usize + 1
    }

    /// Configured `U`, or the next multiple of 256 above 1.3× the 99.9%
    /// excess-delay quantile plus margins for the guard and pulse tail.
    pub fn delay_bins(&self) -> usize {
        self.delay_bins.unwrap_or_else(|| {
            let span = 1.3 * self.excess_quantile_ns(0.999) / self.bin_ns();
            let raw = span.ceil() as usize + self.guard_bins + 2 * super::pulse::HALF_WIDTH_BINS;
            raw.div_ceil(256).max(1) * 256
        })
    }

    pub fn p_toward(&self) -> f64 {
        self.p_toward.unwrap_or(if self.scenario.id.is_oncoming() { 1.0 } else { 0.5 })
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_floor_db.map_or(0.0, |db| 10f64.powf(db / 10.0))
    }

    /// Relative travel per set, `T_r (v_tx + v_rx)`, in metres.
    pub fn set_travel(&self) -> f64 {
        self.set_period * self.kinematics.v_sum()
    }

    pub fn min_speed(&self) -> f64 {
        MIN_SPEED
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin_model, ScenarioId};

    fn base() -> SimConfig {
        SimConfig::new(builtin_model(ScenarioId::UOT), Kinematics::convoy(10.0, 10.0, 100.0, 0.0), 1.0, 1)
    }

    #[test]
    fn timing_limits_enforced() {
        let mut c = base();
        assert!(c.validate().is_ok());
        c.snapshots_per_set = 13;
        c.snapshot_interval = 0.7e-3;
        assert!(c.validate().is_ok());
        c.set_period = 0.005;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base();
        c.snapshots_per_set = 5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn auto_grid_covers_delay_tail() {
        let c = base();
        let u = c.delay_bins();
        assert_eq!(u % 256, 0);
        assert!(u as f64 > c.excess_quantile_ns(0.999) + c.guard_bins as f64);
        let mut small = base();
        small.delay_bins = Some(128);
        assert!(small.validate().is_err());
    }
}
