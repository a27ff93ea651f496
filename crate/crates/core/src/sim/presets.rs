//! Default geometry and timing per scenario.
//!
//! Oncoming runs approach from far away, pass at a small lateral distance and
//! separate again; convoy runs keep a slowly drifting gap.

use super::config::SimConfig;
use super::kinematics::{kmh, Kinematics};
use crate::scenario::{builtin_model, ScenarioId, ScenarioModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub kinematics: Kinematics,
    pub duration: f64,
    pub set_period: f64,
}

fn pass(v_kmh: f64, d0: f64, min_distance: f64) -> Kinematics {
    Kinematics::oncoming(kmh(v_kmh), kmh(v_kmh), d0, min_distance)
}

/// Time for a closing run to go from `d0` to `min_distance` and back.
fn pass_duration(k: &Kinematics) -> f64 {
    2.0 * (k.d0 - k.min_distance) / k.v_sum()
}

pub fn preset(id: ScenarioId) -> Preset {
    use ScenarioId::*;
    let (kinematics, set_period) = match id {
        H2I => {
            let mut k = Kinematics::oncoming(kmh(100.0), 0.0, 500.0, 10.0);
            k.rx_infrastructure = true;
            (k, 0.02)
        }
        HCT => (Kinematics::convoy(kmh(100.0), kmh(100.0), 40.0, 2.0), 0.02),
        HOT => (pass(140.0, 640.0, 10.0), 0.01),
        RCT => (Kinematics::convoy(kmh(70.0), kmh(70.0), 50.0, 1.0), 0.02),
        ROT => (pass(85.0, 500.0, 10.0), 0.01),
        TCT => (Kinematics::convoy(kmh(55.0), kmh(55.0), 30.0, 1.0), 0.01),
        UCT => (Kinematics::convoy(kmh(35.0), kmh(35.0), 20.0, 0.5), 0.01),
        UOT => (pass(25.0, 250.0, 10.0), 0.01),
    };
    let duration = if kinematics.closing {
        // Stop one set short of the far end so the plan never reaches past it.
        pass_duration(&kinematics) - set_period
    } else {
        match id {
            TCT => 30.0,
            _ => 40.0,
        }
    };
    Preset { kinematics, duration, set_period }
}

/// A ready-to-run configuration for `model` using its scenario's preset.
pub fn preset_config(model: ScenarioModel, seed: u64) -> SimConfig {
    let p = preset(model.id);
    let mut cfg = SimConfig::new(model, p.kinematics, p.duration, seed);
    cfg.set_period = p.set_period;
    cfg.snapshot_interval = 0.4e-3;
    cfg
}

pub fn builtin_config(id: ScenarioId, seed: u64) -> SimConfig {
    preset_config(builtin_model(id), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for id in ScenarioId::ALL {
            let c = builtin_config(id, 1);
            c.validate().unwrap_or_else(|e| panic!("{id:?}: {e}"));
            assert!((16.0..=124.0).contains(&c.duration), "{id:?} runs {} s", c.duration);
        }
    }

    #[test]
    fn oncoming_presets_pass_the_minimum() {
        let p = preset(ScenarioId::UOT);
        let k = p.kinematics;
        let t_min = (k.d0 - k.min_distance) / k.v_sum();
        assert!(t_min < p.duration);
        assert!((k.distance(t_min) - 10.0).abs() < 1e-9);
    }
}
