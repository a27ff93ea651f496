//! Stochastic channel simulator: a distance-driven birth/death process of
//! multipath components and wideband impulse-response synthesis.

pub mod cirfile;
pub mod config;
pub mod engine;
pub mod kinematics;
pub mod mpc;
pub mod presets;
pub mod pulse;
pub mod recording;
pub mod synth;
pub mod truth;

pub use config::SimConfig;
pub use engine::{run_simulation, run_truth_only, SimSet, Simulator};
pub use kinematics::{plan_sets, Kinematics, RunPlan, SetPlan, C0};
pub use mpc::{evolve_mpc, Mpc};
pub use pulse::Pulse;
pub use recording::{CirSnapshot, RecordingHeader, RecordingSet};
pub use synth::{synth_snapshot, Grid, PathSample};
pub use truth::{GroundTruth, MpcRecord, TruthObs};
