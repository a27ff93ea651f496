use std::f64::consts::TAU;

use rand::RngExt;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::ScenarioModel;
use crate::stats::{DistSpec, StreamRng, Streams};

/// One propagation path, with its birth attributes and its evolving state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub id: u64,
    pub is_los: bool,
    /// Birth time in seconds; negative for paths born before the run.
    pub birth_time: f64,
    /// First set in which the path exists.
    pub birth_set: usize,
    pub birth_distance: f64,
    /// Excess delay over the LOS path at birth, ns.
    pub excess_delay_ns: f64,
    /// Relative Doppler magnitude drawn at birth.
    pub rel_doppler: f64,
    /// Lifetime as relative travel distance, metres.
    pub lifetime_m: f64,
    /// Constant linear amplitude.
    pub amplitude: f64,
    /// Doppler in Hz at `time`; positive while the path shortens.
    pub doppler_hz: f64,
    /// Delay in ns at `time`.
    pub delay_ns: f64,
    /// Phase in `[0, 2π)` at `time`.
    pub phase: f64,
    /// Time of the state above, seconds.
    pub time: f64,
    /// Relative travel since birth, metres.
    pub traveled_m: f64,
}

impl Mpc {
    pub fn alive(&self) -> bool {
        self.is_los || self.traveled_m <= self.lifetime_m
    }

    /// Delay in ns after a further `dt` seconds, without changing state.
    pub fn delay_after(&self, dt: f64, carrier: f64) -> f64 {
        self.delay_ns - self.doppler_hz / carrier * dt * 1e9
    }

    pub fn phase_after(&self, dt: f64) -> f64 {
        (self.phase + TAU * self.doppler_hz * dt).rem_euclid(TAU)
    }
}

/// Advance a path by `dt` seconds at relative speed `v_sum`.
///
/// The delay drifts by `-(ν/f_c)·dt`, the phase advances by `2πν·dt`, the
/// amplitude is constant, and the travelled distance grows by `v_sum·dt`.
/// The path is dead once that distance exceeds its lifetime.
pub fn evolve_mpc(mpc: &Mpc, dt: f64, carrier: f64, v_sum: f64) -> Mpc {
    let mut next = mpc.clone();
    next.delay_ns = mpc.delay_after(dt, carrier);
    next.phase = mpc.phase_after(dt);
    next.time = mpc.time + dt;
    next.traveled_m = mpc.traveled_m + v_sum * dt;
    next
}

/// Free-space amplitude `c0 / (4π d f_c)` of the direct path.
pub fn los_amplitude(d: f64, carrier: f64) -> f64 {
    super::kinematics::C0 / (4.0 * std::f64::consts::PI * d.max(1.0) * carrier)
}

/// Draws the attributes of newborn paths, each from its own substream.
pub struct NewbornSampler {
    lifetime: DistSpec,
    excess_delay: DistSpec,
    rel_doppler: DistSpec,
    shadowing: Option<Normal<f64>>,
    decay_ns: f64,
    p_toward: f64,
    rng_lifetime: StreamRng,
    rng_delay: StreamRng,
    rng_doppler: StreamRng,
    rng_sign: StreamRng,
    rng_amplitude: StreamRng,
    rng_phase: StreamRng,
}

/// What the caller knows about the moment of birth.
#[derive(Debug, Clone, Copy)]
pub struct BirthContext {
    pub id: u64,
    pub time: f64,
    pub set: usize,
    pub distance: f64,
    pub los_delay_ns: f64,
    pub los_doppler_hz: f64,
    pub max_doppler_hz: f64,
    pub carrier: f64,
}

impl NewbornSampler {
    pub fn new(
        model: &ScenarioModel,
        streams: &Streams,
        decay_ns: f64,
        shadowing_db: f64,
        p_toward: f64,
    ) -> Result<Self> {
        Ok(NewbornSampler {
            lifetime: DistSpec::birnbaum_saunders(model.lifetime.eta, model.lifetime.gamma)?,
            excess_delay: DistSpec::log_normal(model.excess_delay.psi, model.excess_delay.rho)?,
            rel_doppler: DistSpec::weibull(model.rel_doppler.zeta, model.rel_doppler.kappa)?,
            shadowing: (shadowing_db > 0.0).then(|| Normal::new(0.0, shadowing_db).expect("finite sigma")),
            decay_ns,
            p_toward,
            rng_lifetime: streams.stream("mpc.lifetime"),
            rng_delay: streams.stream("mpc.excess_delay"),
            rng_doppler: streams.stream("mpc.rel_doppler"),
            rng_sign: streams.stream("mpc.doppler_sign"),
            rng_amplitude: streams.stream("mpc.amplitude"),
            rng_phase: streams.stream("mpc.phase"),
        })
    }

    pub fn lifetime_law(&self) -> &DistSpec {
        &self.lifetime
    }

    pub fn draw(&mut self, ctx: BirthContext) -> Mpc {
        let excess = self.excess_delay.sample(&mut self.rng_delay);
        let rel = self.rel_doppler.sample(&mut self.rng_doppler);
        let lifetime = self.lifetime.sample(&mut self.rng_lifetime);
        let toward = self.rng_sign.random::<f64>() < self.p_toward;
        // "Toward" follows the sign of the direct path's Doppler; with no
        // geometric Doppler it means approaching.
        let los_sign = if ctx.los_doppler_hz < 0.0 { -1.0 } else { 1.0 };
        let sign = if toward { los_sign } else { -los_sign };
        let shadow_db = self.shadowing.map_or(0.0, |n| n.sample(&mut self.rng_amplitude));
        let amplitude = los_amplitude(ctx.distance, ctx.carrier)
            * 10f64.powf(-excess / (10.0 * self.decay_ns))
            * 10f64.powf(shadow_db / 20.0);
        let phase = self.rng_phase.random::<f64>() * TAU;
        Mpc {
            id: ctx.id,
            is_los: false,
            birth_time: ctx.time,
            birth_set: ctx.set,
            birth_distance: ctx.distance,
            excess_delay_ns: excess,
            rel_doppler: rel,
            lifetime_m: lifetime,
            amplitude,
            doppler_hz: sign * rel * ctx.max_doppler_hz,
            delay_ns: ctx.los_delay_ns + excess,
            phase,
            time: ctx.time,
            traveled_m: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(doppler: f64) -> Mpc {
        Mpc {
            id: 1,
            is_los: false,
            birth_time: 0.0,
            birth_set: 0,
            birth_distance: 100.0,
            excess_delay_ns: 20.0,
            rel_doppler: 0.5,
            lifetime_m: 50.0,
            amplitude: 1e-6,
            doppler_hz: doppler,
            delay_ns: 353.0,
            phase: 1.0,
            time: 0.0,
            traveled_m: 0.0,
        }
    }

    #[test]
    fn zero_doppler_is_static() {
        let m = evolve_mpc(&path(0.0), 0.3, 5.7e9, 20.0);
        assert_eq!(m.delay_ns, 353.0);
        assert_eq!(m.phase, 1.0);
        assert_eq!(m.traveled_m, 6.0);
    }

    #[test]
    fn delay_drift_arithmetic() {
        let m = evolve_mpc(&path(570.0), 1e-3, 5.7e9, 20.0);
        assert!((m.delay_ns - (353.0 - 0.1)).abs() < 1e-12);
        let expected_phase = (1.0 + TAU * 0.57f64).rem_euclid(TAU);
        assert!((m.phase - expected_phase).abs() < 1e-12);
    }

    #[test]
    fn lifetime_in_sets() {
        // Y = 50 m at 25 m/s and T_r = 50 ms: alive for sets 0..=40.
        let mut m = path(0.0);
        let mut sets = 0;
        loop {
            m = evolve_mpc(&m, 0.05, 5.7e9, 25.0);
            if !m.alive() {
                break;
            }
            sets += 1;
        }
        assert_eq!(sets, 40);
    }
}
