//! Streaming birth/death simulation: yields recording sets in order with
//! their ground truth, keeping only the alive paths in memory.

use std::collections::VecDeque;

use rand_distr::{Distribution, Poisson};

use super::config::SimConfig;
use super::kinematics::{plan_sets, SetPlan, C0};
use super::mpc::{evolve_mpc, los_amplitude, BirthContext, Mpc, NewbornSampler};
use super::pulse::Pulse;
use super::recording::{RecordingHeader, RecordingSet};
use super::synth::{synth_snapshot, Grid, PathSample};
use super::truth::{CalibrationInfo, GroundTruth, MpcRecord, TruthObs};
use crate::error::{Error, Result};
use crate::stats::{StreamRng, Streams};
use rand::RngExt;

/// Pre-run travel is capped here even for very long-lived laws.
const MAX_PREROLL_M: f64 = 5000.0;

#[derive(Debug, Clone)]
pub struct SimSet {
    pub set: RecordingSet,
    pub truth: Vec<TruthObs>,
}

struct Alive {
    mpc: Mpc,
    record: MpcRecord,
    /// Relative-travel coordinate at which the lifetime clock started.
    origin: Origin,
}

enum Origin {
    Set(usize),
    Travel(f64),
}

pub struct Simulator {
    cfg: SimConfig,
    plan: Vec<SetPlan>,
    pulse: Pulse,
    bins: usize,
    streams: Streams,
    sampler: NewbornSampler,
    birth_rng: StreamRng,
    placement_rng: StreamRng,
    alive_per_unit: Option<f64>,
    births_enabled: bool,
    delta: f64,
    next_meter: i64,
    pending: VecDeque<f64>,
    next_id: u64,
    next_set: usize,
    alive: Vec<Alive>,
    finished: Vec<MpcRecord>,
    los_record: MpcRecord,
    synthesize: bool,
}

/// Expected number of alive paths per unit birth rate (births per metre)
/// when births are snapped to set starts: `δ Σ_{j≥0} P(Y ≥ jδ)`.
pub fn alive_per_unit_rate(lifetime: &crate::stats::DistSpec, delta: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..50_000_000u64 {
        let s = if j == 0 { 1.0 } else { lifetime.sf(j as f64 * delta) };
        sum += s;
        if j > 0 && s < 1e-13 * sum {
            break;
        }
    }
    sum * delta
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let plan =
            plan_sets(&cfg.kinematics, cfg.duration, cfg.set_period, cfg.snapshots_per_set, cfg.snapshot_interval);
        if plan.is_empty() {
            return Err(Error::Config("the run contains no complete recording set".into()));
        }
        let streams = Streams::new(cfg.seed);
        let sampler =
            NewbornSampler::new(&cfg.scenario, &streams, cfg.amplitude_decay_ns, cfg.shadowing_db, cfg.p_toward())?;
        let delta = cfg.set_travel();
        let births_enabled = delta > 0.0 && cfg.kinematics.above_min_speed(cfg.min_speed());
        let alive_per_unit =
            (cfg.calibrate && births_enabled).then(|| alive_per_unit_rate(sampler.lifetime_law(), delta));
        let preroll = if births_enabled { sampler.lifetime_law().quantile(1.0 - 1e-4).min(MAX_PREROLL_M) } else { 0.0 };
        let los_record = MpcRecord {
            id: 0,
            is_los: true,
            birth_time: 0.0,
            preexisting: true,
            birth_distance: cfg.kinematics.distance(0.0),
            excess_delay_ns: 0.0,
            rel_doppler: 0.0,
            doppler_hz: -cfg.kinematics.range_rate(0.0) * cfg.carrier / C0,
            lifetime_m: f64::INFINITY,
            amplitude: los_amplitude(cfg.kinematics.distance(0.0), cfg.carrier),
            first_set: 0,
            last_set: 0,
            censored: true,
        };
        Ok(Simulator {
            pulse: Pulse::new(cfg.bandwidth),
            bins: cfg.delay_bins(),
            birth_rng: streams.stream("births.count"),
            placement_rng: streams.stream("births.placement"),
            streams,
            sampler,
            alive_per_unit,
            births_enabled,
            delta,
            next_meter: -(preroll.ceil() as i64),
            pending: VecDeque::new(),
            next_id: 1,
            next_set: 0,
            alive: Vec::new(),
            finished: Vec::new(),
            los_record,
            synthesize: true,
            plan,
            cfg,
        })
    }

    /// Skip impulse-response synthesis; sets come back without snapshots.
    pub fn truth_only(mut self) -> Self {
        self.synthesize = false;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn plan(&self) -> &[SetPlan] {
        &self.plan
    }

    pub fn header(&self) -> RecordingHeader {
        RecordingHeader {
            bandwidth: self.cfg.bandwidth,
            bin_s: 1.0 / self.cfg.bandwidth,
            delay_bins: self.bins as u32,
            set_count: self.plan.len() as u32,
        }
    }

    pub fn calibration(&self) -> Option<CalibrationInfo> {
        self.alive_per_unit.map(|a| CalibrationInfo { alive_per_unit_rate: a })
    }

    /// Births per metre of relative travel at distance `d`.
    pub fn birth_rate(&self, d: f64) -> f64 {
        match self.alive_per_unit {
            Some(e) => (self.cfg.scenario.number_lambda(d) - 1.0).max(0.0) / e,
            None => self.cfg.scenario.birth_lambda(d),
        }
    }

    fn los_delay_ns(&self, t: f64) -> f64 {
        self.cfg.kinematics.distance(t) / C0 * 1e9
    }

    fn los_doppler(&self, t: f64) -> f64 {
        -self.cfg.kinematics.range_rate(t) * self.cfg.carrier / C0
    }

    /// Draw the births of metre `m` of relative travel, `[m, m+1)`, and
    /// queue their positions.
    pub fn step_births(&mut self, meter: i64) -> usize {
        let v = self.cfg.kinematics.v_sum();
        let d = self.cfg.kinematics.distance((meter as f64 + 0.5) / v);
        let rate = self.birth_rate(d);
        let n = if rate > 0.0 {
            Poisson::new(rate).expect("finite positive rate").sample(&mut self.birth_rng) as usize
        } else {
            0
        };
        let mut pos: Vec<f64> = (0..n).map(|_| meter as f64 + self.placement_rng.random::<f64>()).collect();
        pos.sort_by(f64::total_cmp);
        self.pending.extend(pos);
        n
    }

    fn fill_births(&mut self, travel: f64) {
        if !self.births_enabled {
            return;
        }
        while (self.next_meter as f64) <= travel {
            let m = self.next_meter;
            self.step_births(m);
            self.next_meter += 1;
        }
    }

    fn reflect_at_los(&self, mpc: &mut Mpc, t: f64) {
        let los = self.los_delay_ns(t);
        if mpc.delay_ns < los {
            mpc.delay_ns = 2.0 * los - mpc.delay_ns;
            mpc.doppler_hz = 2.0 * self.los_doppler(t) - mpc.doppler_hz;
        }
    }

    fn spawn(&mut self, set: usize, t: f64, birth_time: f64) -> Mpc {
        let d = self.cfg.kinematics.distance(birth_time);
        let ctx = BirthContext {
            id: self.next_id,
            time: birth_time,
            set,
            distance: d,
            los_delay_ns: self.los_delay_ns(birth_time),
            los_doppler_hz: self.los_doppler(birth_time),
            max_doppler_hz: self.cfg.kinematics.max_doppler(self.cfg.carrier),
            carrier: self.cfg.carrier,
        };
        let mut mpc = self.sampler.draw(ctx);
        if birth_time < t {
            mpc = evolve_mpc(&mpc, t - birth_time, self.cfg.carrier, self.cfg.kinematics.v_sum());
        }
        mpc
    }

    fn admit(&mut self, mpc: Mpc, origin: Origin, preexisting: bool) {
        self.next_id += 1;
        let record = MpcRecord {
            id: mpc.id,
            is_los: false,
            birth_time: mpc.birth_time,
            preexisting,
            birth_distance: mpc.birth_distance,
            excess_delay_ns: mpc.excess_delay_ns,
            rel_doppler: mpc.rel_doppler,
            doppler_hz: mpc.doppler_hz,
            lifetime_m: mpc.lifetime_m,
            amplitude: mpc.amplitude,
            first_set: mpc.birth_set,
            last_set: mpc.birth_set,
            censored: false,
        };
        self.alive.push(Alive { mpc, record, origin });
    }

    fn process_set(&mut self, j: usize) -> Result<SimSet> {
        let plan = self.plan[j].clone();
        let t = plan.t0;
        let v = self.cfg.kinematics.v_sum();
        let carrier = self.cfg.carrier;
        let travel = j as f64 * self.delta;

        // Age the population and retire the dead.
        let mut survivors = Vec::with_capacity(self.alive.len());
        let reversal = self.cfg.kinematics.reversal_time();
        for mut a in std::mem::take(&mut self.alive) {
            a.mpc = match reversal {
                Some(tv) if a.mpc.time < tv && tv <= t => {
                    // The geometry turns from closing to opening: every path
                    // flips its Doppler along with the direct path.
                    let mut m = evolve_mpc(&a.mpc, tv - a.mpc.time, carrier, v);
                    m.doppler_hz = -m.doppler_hz;
                    evolve_mpc(&m, t - tv, carrier, v)
                }
                _ => evolve_mpc(&a.mpc, t - a.mpc.time, carrier, v),
            };
            a.mpc.traveled_m = match a.origin {
                Origin::Set(b) => (j - b) as f64 * self.delta,
                Origin::Travel(s) => travel - s,
            };
            if a.mpc.alive() {
                self.reflect_at_los(&mut a.mpc, t);
                survivors.push(a);
            } else {
                self.finished.push(a.record);
            }
        }
        self.alive = survivors;

        // Births up to this set's travel coordinate.
        self.fill_births(travel);
        while let Some(&s) = self.pending.front() {
            if s > travel {
                break;
            }
            self.pending.pop_front();
            if s <= 0.0 {
                let tb = s / v;
                let mut mpc = self.spawn(0, t, tb);
                mpc.traveled_m = -s;
                if mpc.alive() {
                    self.reflect_at_los(&mut mpc, t);
                    self.admit(mpc, Origin::Travel(s), true);
                }
            } else {
                let mpc = self.spawn(j, t, t);
                self.admit(mpc, Origin::Set(j), false);
            }
        }

        // Synthesise the snapshots.
        let bin_ns = self.cfg.bin_ns();
        let guard = self.cfg.guard_bins as f64 * bin_ns;
        let grids: Vec<Grid> = plan
            .snapshot_times
            .iter()
            .map(|&ts| Grid { reference_delay_ns: self.los_delay_ns(ts) - guard, bins: self.bins, bin_ns })
            .collect();
        let in_window: Vec<bool> = self
            .alive
            .iter()
            .map(|a| {
                plan.snapshot_times.iter().zip(&grids).all(|(&ts, g)| g.contains(a.mpc.delay_after(ts - t, carrier)))
            })
            .collect();
        let mut noise_rng = self.streams.indexed("noise", j as u64);
        let noise_power = self.cfg.noise_power();
        let mut snapshots = Vec::with_capacity(plan.snapshot_times.len());
        for (&ts, grid) in plan.snapshot_times.iter().zip(&grids).filter(|_| self.synthesize) {
            let d = self.cfg.kinematics.distance(ts);
            let mut paths = Vec::with_capacity(self.alive.len() + 1);
            paths.push(PathSample {
                id: 0,
                amplitude: los_amplitude(d, carrier),
                phase: (-std::f64::consts::TAU * (carrier * d / C0).fract()).rem_euclid(std::f64::consts::TAU),
                delay_ns: d / C0 * 1e9,
            });
            for (a, &inside) in self.alive.iter().zip(&in_window) {
                if inside {
                    paths.push(PathSample {
                        id: a.mpc.id,
                        amplitude: a.mpc.amplitude,
                        phase: a.mpc.phase_after(ts - t),
                        delay_ns: a.mpc.delay_after(ts - t, carrier),
                    });
                }
            }
            let noise = (noise_power > 0.0).then_some((&mut noise_rng, noise_power));
            snapshots.push(synth_snapshot(&paths, grid, &self.pulse, ts, noise)?);
        }

        // Truth at the mean snapshot time.
        let tm = plan.snapshot_times.iter().sum::<f64>() / plan.snapshot_times.len() as f64;
        let dm = self.cfg.kinematics.distance(tm);
        let mut truth = Vec::with_capacity(self.alive.len() + 1);
        truth.push(TruthObs {
            set: j,
            id: 0,
            amplitude: los_amplitude(dm, carrier),
            delay_ns: dm / C0 * 1e9,
            doppler_hz: self.los_doppler(tm),
            in_window: true,
        });
        for (a, &inside) in self.alive.iter_mut().zip(&in_window) {
            a.record.last_set = j;
            truth.push(TruthObs {
                set: j,
                id: a.mpc.id,
                amplitude: a.mpc.amplitude,
                delay_ns: a.mpc.delay_after(tm - t, carrier),
                doppler_hz: a.mpc.doppler_hz,
                in_window: inside,
            });
        }
        self.los_record.last_set = j;

        Ok(SimSet {
            set: RecordingSet { index: j, t0: t, d: plan.d, v_tx: plan.v_tx, v_rx: plan.v_rx, snapshots },
            truth,
        })
    }

    /// Records of every path observed so far, ordered by id. Paths still
    /// alive are marked censored once the run is exhausted.
    pub fn records(&self) -> Vec<MpcRecord> {
        let done = self.next_set >= self.plan.len();
        let mut out = vec![self.los_record.clone()];
        out.extend(self.finished.iter().cloned());
        out.extend(self.alive.iter().map(|a| MpcRecord { censored: done, ..a.record.clone() }));
        out.sort_by_key(|r| r.id);
        out
    }

    pub fn ground_truth(&self, observations: Vec<TruthObs>) -> GroundTruth {
        GroundTruth { config: self.cfg.clone(), calibration: self.calibration(), mpcs: self.records(), observations }
    }
}

impl Iterator for Simulator {
    type Item = Result<SimSet>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next_set >= self.plan.len() {
            return None;
        }
        let j = self.next_set;
        self.next_set += 1;
        Some(self.process_set(j))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.plan.len() - self.next_set;
        (left, Some(left))
    }
}

/// Simulate a whole run in memory.
pub fn run_simulation(cfg: SimConfig) -> Result<(Vec<RecordingSet>, GroundTruth)> {
    let mut sim = Simulator::new(cfg)?;
    let mut sets = Vec::new();
    let mut obs = Vec::new();
    for item in sim.by_ref() {
        let s = item?;
        sets.push(s.set);
        obs.extend(s.truth);
    }
    let truth = sim.ground_truth(obs);
    Ok((sets, truth))
}

/// Simulate without keeping impulse responses: ground truth only.
pub fn run_truth_only(cfg: SimConfig) -> Result<GroundTruth> {
    let mut sim = Simulator::new(cfg)?.truth_only();
    let mut obs = Vec::new();
    for item in sim.by_ref() {
        obs.extend(item?.truth);
    }
    Ok(sim.ground_truth(obs))
}
