use num_complex::Complex32;
use serde::{Deserialize, Serialize};

/// One impulse response on a `1/B`-spaced delay grid whose first bin sits
/// at `reference_delay_ns`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSnapshot {
    pub t: f64,
    pub reference_delay_ns: f64,
    pub h: Vec<Complex32>,
}

impl CirSnapshot {
    pub fn energy(&self) -> f64 {
        self.h.iter().map(|c| c.norm_sqr() as f64).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSet {
    pub index: usize,
    pub t0: f64,
    pub d: f64,
    pub v_tx: f64,
    pub v_rx: f64,
    pub snapshots: Vec<CirSnapshot>,
}

impl RecordingSet {
    pub fn v_sum(&self) -> f64 {
        self.v_tx + self.v_rx
    }
}

/// Fixed properties of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordingHeader {
    pub bandwidth: f64,
    /// Delay bin width `T_b` in seconds.
    pub bin_s: f64,
    pub delay_bins: u32,
    pub set_count: u32,
}

impl RecordingHeader {
    pub fn bin_ns(&self) -> f64 {
        self.bin_s * 1e9
    }
}
