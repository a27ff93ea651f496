//! Sounder pulse: a Hann-windowed sinc of the measurement bandwidth,
//! truncated at ±8 delay bins, with peak 1.
//!
//! Sampled on-bin the pulse has energy exactly 1, since the sinc vanishes on
//! every other integer. Off-bin placements carry slightly different energy;
//! see [`Pulse::energy`].

use std::f64::consts::PI;

pub const HALF_WIDTH_BINS: usize = 8;
pub const OVERSAMPLE: usize = 8;

#[derive(Debug, Clone)]
pub struct Pulse {
    bin_ns: f64,
    /// `w(k / OVERSAMPLE)` for `k` in `-HALF*OS ..= HALF*OS`.
    table: Vec<f64>,
}

fn shape(x: f64) -> f64 {
    let h = HALF_WIDTH_BINS as f64;
    if x.abs() >= h {
        return 0.0;
    }
    let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    sinc * 0.5 * (1.0 + (PI * x / h).cos())
}

impl Pulse {
    pub fn new(bandwidth_hz: f64) -> Self {
        let n = (HALF_WIDTH_BINS * OVERSAMPLE) as i64;
        let table = (-n..=n).map(|k| shape(k as f64 / OVERSAMPLE as f64)).collect();
        Pulse { bin_ns: 1e9 / bandwidth_hz, table }
    }

    /// Delay bin width `T_b` in ns.
    pub fn bin_ns(&self) -> f64 {
        self.bin_ns
    }

    pub fn half_width(&self) -> usize {
        HALF_WIDTH_BINS
    }

    /// Pulse value at an offset given in bins.
    pub fn at(&self, x_bins: f64) -> f64 {
        shape(x_bins)
    }

    /// Pulse value at offset `k / OVERSAMPLE` bins, from the table.
    pub fn at_oversampled(&self, k: i64) -> f64 {
        let n = (HALF_WIDTH_BINS * OVERSAMPLE) as i64;
        if k.abs() > n {
            0.0
        } else {
            self.table[(k + n) as usize]
        }
    }

    /// Energy `Σ_u w(u - x)²` of the pulse sampled on the integer grid
    /// when centred at `x` bins.
    pub fn energy(&self, x_bins: f64) -> f64 {
        let frac = x_bins - x_bins.floor();
        let h = HALF_WIDTH_BINS as i64;
        (-h..=h + 1).map(|u| shape(u as f64 - frac).powi(2)).sum()
    }

    /// Integer bin range `[lo, hi]` touched by a pulse centred at `x` bins.
    pub fn support(&self, x_bins: f64) -> (i64, i64) {
        let h = HALF_WIDTH_BINS as f64;
        ((x_bins - h).floor() as i64 + 1, (x_bins + h).ceil() as i64 - 1)
    }

    /// Samples `w(u - x)` for every `u` in [`Pulse::support`], written to
    /// `out[..n]`. Returns `(lo, n)`.
    ///
    /// Uses one `sin` and one `sin_cos` per call: the sinc numerator only
    /// flips sign from bin to bin and the window cosine is rotated.
    pub fn taps(&self, x_bins: f64, out: &mut [f64; TAPS]) -> (i64, usize) {
        let (lo, hi) = self.support(x_bins);
        let n = (hi - lo + 1) as usize;
        let h = HALF_WIDTH_BINS as f64;
        let d0 = lo as f64 - x_bins;
        let mut s = (PI * d0).sin();
        let (mut ws, mut wc) = (PI * d0 / h).sin_cos();
        let (rs, rc) = (PI / h).sin_cos();
        for (k, o) in out.iter_mut().take(n).enumerate() {
            let d = d0 + k as f64;
            let sinc = if d.abs() < 1e-12 { 1.0 } else { s / (PI * d) };
            *o = if d.abs() >= h { 0.0 } else { sinc * 0.5 * (1.0 + wc) };
            s = -s;
            let c = wc * rc - ws * rs;
            ws = ws * rc + wc * rs;
            wc = c;
        }
        (lo, n)
    }
}

/// Upper bound on the number of bins a pulse touches.
pub const TAPS: usize = 2 * HALF_WIDTH_BINS + 1;
