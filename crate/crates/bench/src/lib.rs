//! Shared fixtures for the benchmarks.

use vmpc_core::extract::ExtractConfig;
use vmpc_core::scenario::ScenarioId;
use vmpc_core::sim::{presets::builtin_config, Pulse, RecordingSet, Simulator};

/// Every `step`-th set of the first `count * step` of a calibrated built-in
/// run, with the pulse and extraction config that match it.
pub fn recorded_sets(id: ScenarioId, count: usize, step: usize) -> (Vec<RecordingSet>, Pulse, ExtractConfig) {
    let mut cfg = builtin_config(id, 1);
    cfg.calibrate = true;
    let pulse = Pulse::new(cfg.bandwidth);
    let extract = ExtractConfig { carrier: cfg.carrier, ..ExtractConfig::default() };
    let sim = Simulator::new(cfg).expect("built-in config is valid");
    let sets = sim.step_by(step).take(count).map(|s| s.expect("simulation step").set).collect();
    (sets, pulse, extract)
}
