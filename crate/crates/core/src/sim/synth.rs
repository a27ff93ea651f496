use num_complex::{Complex32, Complex64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::pulse::Pulse;
use super::recording::CirSnapshot;
use crate::error::{Error, Result};

/// A path as seen by one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub id: u64,
    pub amplitude: f64,
    pub phase: f64,
    pub delay_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub reference_delay_ns: f64,
    pub bins: usize,
    pub bin_ns: f64,
}

impl Grid {
    /// Position of `delay_ns` in bins.
    pub fn position(&self, delay_ns: f64) -> f64 {
        (delay_ns - self.reference_delay_ns) / self.bin_ns
    }

    pub fn contains(&self, delay_ns: f64) -> bool {
        let x = self.position(delay_ns);
        x >= 0.0 && x <= (self.bins - 1) as f64
    }
}

/// Add `amplitude·e^{jφ}·w(u - x)` to `h`, clipped to the grid.
pub fn add_pulse(h: &mut [Complex64], pulse: &Pulse, x: f64, coeff: Complex64) {
    let (lo, hi) = pulse.support(x);
    let lo = lo.max(0);
    let hi = hi.min(h.len() as i64 - 1);
    for u in lo..=hi {
        h[u as usize] += coeff * pulse.at(u as f64 - x);
    }
}

/// Synthesise `h[u] = Σ a_k e^{jφ_k} w(u T_b - τ_k) + n[u]`.
///
/// `noise` is a stream and per-bin complex noise power; every path must lie
/// inside the grid.
pub fn synth_snapshot<R: Rng + ?Sized>(
    paths: &[PathSample],
    grid: &Grid,
    pulse: &Pulse,
    t: f64,
    noise: Option<(&mut R, f64)>,
) -> Result<CirSnapshot> {
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.bins];
    for p in paths {
        if !grid.contains(p.delay_ns) {
            return Err(Error::GridOverflow {
                id: p.id,
                delay_ns: p.delay_ns,
                lo: grid.reference_delay_ns,
                hi: grid.reference_delay_ns + grid.bins as f64 * grid.bin_ns,
            });
        }
        add_pulse(&mut acc, pulse, grid.position(p.delay_ns), Complex64::from_polar(p.amplitude, p.phase));
    }
    if let Some((rng, power)) = noise {
        if power > 0.0 {
            let s = (power / 2.0).sqrt();
            for v in acc.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *v += Complex64::new(s * re, s * im);
            }
        }
    }
    Ok(CirSnapshot {
        t,
        reference_delay_ns: grid.reference_delay_ns,
        h: acc.into_iter().map(|c| Complex32::new(c.re as f32, c.im as f32)).collect(),
    })
}
