//! Ground truth emitted alongside a simulated recording.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::error::{Error, Result};

/// JSON has no infinity: write it as `null` and read `null` back as +inf.
mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Birth attributes and observed extent of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcRecord {
    pub id: u64,
    pub is_los: bool,
    pub birth_time: f64,
    /// Born before the first set; its birth is not observable.
    pub preexisting: bool,
    pub birth_distance: f64,
    pub excess_delay_ns: f64,
    pub rel_doppler: f64,
    pub doppler_hz: f64,
    /// Infinite for the LOS, stored as `null`.
    #[serde(with = "unbounded")]
    pub lifetime_m: f64,
    pub amplitude: f64,
    pub first_set: usize,
    pub last_set: usize,
    /// Still alive in the final set.
    pub censored: bool,
}

/// True state of one path in one set, at the mean snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthObs {
    pub set: usize,
    pub id: u64,
    pub amplitude: f64,
    pub delay_ns: f64,
    pub doppler_hz: f64,
    /// False when the path drifted off the delay grid and was not
    /// synthesised in this set.
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SimConfig,
    /// Present when the birth rate was calibrated to the number law.
    pub calibration: Option<CalibrationInfo>,
    pub mpcs: Vec<MpcRecord>,
    pub observations: Vec<TruthObs>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInfo {
    /// Expected alive paths per unit birth rate (births per metre).
    pub alive_per_unit_rate: f64,
}

impl GroundTruth {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)
            .map_err(|e| Error::Parse { what: "ground truth".into(), message: e.to_string() })?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        serde_json::from_reader(r).map_err(|e| Error::Parse { what: "ground truth".into(), message: e.to_string() })
    }

    pub fn record(&self, id: u64) -> Option<&MpcRecord> {
        self.mpcs.binary_search_by_key(&id, |m| m.id).ok().map(|i| &self.mpcs[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioId;
    use crate::sim::{presets::builtin_config, run_truth_only};

    #[test]
    fn infinite_los_lifetime_survives_a_file_roundtrip() {
        let mut cfg = builtin_config(ScenarioId::HOT, 2);
        cfg.duration = 0.2;
        let truth = run_truth_only(cfg).unwrap();
        assert!(truth.mpcs.iter().any(|m| m.is_los && m.lifetime_m == f64::INFINITY));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        truth.save(&p).unwrap();
        assert_eq!(GroundTruth::load(&p).unwrap(), truth);
    }
}
