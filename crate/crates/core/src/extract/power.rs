use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy bookkeeping across the extraction stages, summed over snapshots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerAccount {
    /// Snapshot energy above the estimated noise, `Σ (Σ|h|² - U·level)`.
    pub total: f64,
    /// Energy of the detections claimed by short tracks, `Σ a² E_w`.
    pub short: f64,
    /// Energy of the detections in full-lifetime short tracks.
    pub full: f64,
}

impl PowerAccount {
    pub fn merge(&mut self, other: &PowerAccount) {
        self.total += other.total;
        self.short += other.short;
        self.full += other.full;
    }

    /// Loss of the detection and short-term tracking stages, dB.
    pub fn detection_loss_db(&self) -> Result<f64> {
        if !(self.short > 0.0 && self.total > 0.0) {
            return Err(Error::UndefinedLoss("no energy captured by short tracks".into()));
        }
        Ok(10.0 * (self.total / self.short).log10())
    }

    /// Loss from keeping only full-lifetime tracks, dB.
    pub fn longterm_loss_db(&self) -> Result<f64> {
        if !(self.full > 0.0 && self.short > 0.0) {
            return Err(Error::UndefinedLoss("no energy captured by full-lifetime tracks".into()));
        }
        Ok(10.0 * (self.short / self.full).log10())
    }
}

/// `(detection_loss_dB, longterm_loss_dB)`.
pub fn power_loss(account: &PowerAccount) -> Result<(f64, f64)> {
    Ok((account.detection_loss_db()?, account.longterm_loss_db()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_capture_has_no_loss() {
        let a = PowerAccount { total: 2.0, short: 2.0, full: 2.0 };
        assert_eq!(power_loss(&a).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn half_energy_is_three_db() {
        let a = PowerAccount { total: 2.0, short: 2.0, full: 1.0 };
        assert!((a.longterm_loss_db().unwrap() - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn nothing_captured_is_an_error() {
        assert!(matches!(power_loss(&PowerAccount::default()), Err(Error::UndefinedLoss(_))));
    }
}
