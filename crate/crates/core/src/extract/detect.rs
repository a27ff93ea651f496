//! Search-and-subtract path detection on a single impulse response.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::noise::{estimate_noise_floor, Threshold};
use crate::sim::pulse::{Pulse, HALF_WIDTH_BINS, OVERSAMPLE, TAPS};
use crate::sim::CirSnapshot;

/// One path found in one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub t: f64,
    /// Absolute delay in ns, sub-bin.
    pub delay_ns: f64,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub threshold: Threshold,
    /// Also stop once the residual peak is this far below the strongest
    /// input bin; keeps noiseless data from chasing rounding residue.
    pub dynamic_range_db: f64,
    /// Defaults to the grid length.
    pub max_iterations: Option<usize>,
    /// Cyclic re-estimation passes over the paths near each new detection.
    pub refine_passes: usize,
    /// Re-estimation stops once no delay moves by more than this, bins,
    /// or once a pass removes less than this fraction of the threshold
    /// power from the residual.
    pub refine_tol_bins: f64,
    pub refine_tol_power: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            threshold: Threshold::default(),
            dynamic_range_db: 50.0,
            max_iterations: None,
            refine_passes: 40,
            refine_tol_bins: 1e-4,
            refine_tol_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectOutcome {
    pub detections: Vec<Detection>,
    /// Estimated mean noise power per bin.
    pub noise_level: f64,
    /// Power threshold in force.
    pub threshold: f64,
    /// Strongest residual bin power at termination.
    pub residual_peak: f64,
    /// Total snapshot energy `Σ|h|²`.
    pub energy: f64,
    /// Subtraction stopped because the residual energy grew.
    pub aborted: bool,
}

const BLOCK: usize = 32;

struct Residual<'a> {
    r: Vec<Complex64>,
    p: Vec<f64>,
    block_max: Vec<f64>,
    pulse: &'a Pulse,
}

impl<'a> Residual<'a> {
    fn new(snapshot: &CirSnapshot, pulse: &'a Pulse) -> Self {
        let r: Vec<Complex64> = snapshot.h.iter().map(|c| Complex64::new(c.re as f64, c.im as f64)).collect();
        let p: Vec<f64> = r.iter().map(|c| c.norm_sqr()).collect();
        let block_max = p.chunks(BLOCK).map(|b| b.iter().copied().fold(0.0, f64::max)).collect();
        Residual { r, p, block_max, pulse }
    }

    fn len(&self) -> usize {
        self.r.len()
    }

    /// Recompute bin powers over `[lo, hi]` (clipped); returns the change in
    /// residual energy.
    fn refresh(&mut self, lo: i64, hi: i64) -> f64 {
        let lo = lo.max(0) as usize;
        let hi = (hi.max(0) as usize).min(self.len() - 1);
        if lo > hi {
            return 0.0;
        }
        let mut delta = 0.0;
        for u in lo..=hi {
            let v = self.r[u].norm_sqr();
            delta += v - self.p[u];
            self.p[u] = v;
        }
        for b in lo / BLOCK..=hi / BLOCK {
            let end = ((b + 1) * BLOCK).min(self.len());
            self.block_max[b] = self.p[b * BLOCK..end].iter().copied().fold(0.0, f64::max);
        }
        delta
    }

    fn argmax(&self) -> (usize, f64) {
        let (b, _) =
            self.block_max
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let end = ((b + 1) * BLOCK).min(self.len());
        let mut best = (b * BLOCK, f64::NEG_INFINITY);
        for u in b * BLOCK..end {
            if self.p[u] > best.1 {
                best = (u, self.p[u]);
            }
        }
        best
    }

    /// `r += c·w(u - x)`.
    fn add(&mut self, x: f64, c: Complex64) {
        let mut t = [0.0; TAPS];
        let (lo, n) = self.pulse.taps(x, &mut t);
        for (k, &w) in t.iter().take(n).enumerate() {
            let u = lo + k as i64;
            if u >= 0 && (u as usize) < self.r.len() {
                self.r[u as usize] += c * w;
            }
        }
    }

    /// Residual energy over `[lo, hi]` (clipped).
    fn energy_in(&self, lo: f64, hi: f64) -> f64 {
        let lo = (lo.floor().max(0.0)) as usize;
        let hi = (hi.ceil().max(0.0) as usize).min(self.len() - 1);
        self.r.get(lo..=hi).map_or(0.0, |s| s.iter().map(|c| c.norm_sqr()).sum())
    }

    /// `(Σ r[u] w(u - x), Σ w(u - x)²)` over the grid.
    fn project(&self, x: f64) -> (Complex64, f64) {
        let mut t = [0.0; TAPS];
        let (lo, n) = self.pulse.taps(x, &mut t);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut e = 0.0;
        for (k, &w) in t.iter().take(n).enumerate() {
            let u = lo + k as i64;
            if u >= 0 && (u as usize) < self.r.len() {
                acc += self.r[u as usize] * w;
                e += w * w;
            }
        }
        (acc, e)
    }

    /// Energy removed by the best single-pulse fit at `x`.
    fn gain(&self, x: f64) -> f64 {
        let (c, e) = self.project(x);
        if e > 0.0 {
            c.norm_sqr() / e
        } else {
            0.0
        }
    }

    /// Best offset on the oversampled grid around bin `i`, refined by a
    /// parabola through its neighbours.
    fn coarse(&self, i: usize) -> f64 {
        let os = OVERSAMPLE as i64;
        let h = HALF_WIDTH_BINS as i64;
        let mut vals = [0.0; 2 * OVERSAMPLE + 1];
        for (j, k) in (-os..=os).enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut e = 0.0;
            for m in -h..=h {
                let u = i as i64 + m;
                if u < 0 || u as usize >= self.r.len() {
                    continue;
                }
                let w = self.pulse.at_oversampled(os * m - k);
                acc += self.r[u as usize] * w;
                e += w * w;
            }
            vals[j] = if e > 0.0 { acc.norm_sqr() / e } else { 0.0 };
        }
        let (j, _) =
            vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (j, &v)| if v > a.1 { (j, v) } else { a });
        let step = 1.0 / OVERSAMPLE as f64;
        let mut x = i as f64 + (j as i64 - os) as f64 * step;
        if j > 0 && j + 1 < vals.len() {
            x += vertex(vals[j - 1], vals[j], vals[j + 1], step);
        }
        x
    }

    /// Local maximisation of [`Residual::gain`] by walking and parabolic
    /// steps at shrinking scales.
    fn polish(&self, x0: f64) -> f64 {
        let lo = -0.5;
        let hi = self.len() as f64 - 0.5;
        let mut x = x0.clamp(lo, hi);
        let mut fx = self.gain(x);
        for h in [1.0 / 16.0, 1.0 / 128.0, 1.0 / 1024.0] {
            for _ in 0..12 {
                let fm = self.gain(x - h);
                let fp = self.gain(x + h);
                if fm > fx && fm >= fp {
                    x -= h;
                    fx = fm;
                } else if fp > fx {
                    x += h;
                    fx = fp;
                } else {
                    let cand = (x + vertex(fm, fx, fp, h)).clamp(lo, hi);
                    let fc = self.gain(cand);
                    if fc > fx {
                        x = cand;
                        fx = fc;
                    }
                    break;
                }
            }
        }
        x
    }
}

/// Offset of the vertex of the parabola through `(-h, a)`, `(0, b)`, `(h, c)`,
/// limited to `±h`; zero unless the parabola is concave.
fn vertex(a: f64, b: f64, c: f64, h: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        (h * (a - c) / (2.0 * den)).clamp(-h, h)
    } else {
        0.0
    }
}

struct Comp {
    x: f64,
    c: Complex64,
}

/// Detect paths by repeatedly fitting and subtracting the sounder pulse at
/// the strongest residual bin until it falls below the threshold.
///
/// Each new path triggers cyclic re-estimation of every path within one
/// pulse width of it, which separates paths closer than the pulse width.
pub fn detect(snapshot: &CirSnapshot, pulse: &Pulse, cfg: &DetectConfig) -> DetectOutcome {
    let bins = snapshot.h.len();
    let noise_level = estimate_noise_floor(&snapshot.h);
    let energy = snapshot.energy();
    let mut res = Residual::new(snapshot, pulse);
    let empty = |threshold, residual_peak| DetectOutcome {
        detections: Vec::new(),
        noise_level,
        threshold,
        residual_peak,
        energy,
        aborted: false,
    };
    if bins == 0 {
        return empty(0.0, 0.0);
    }
    let (_, peak0) = res.argmax();
    let threshold = (noise_level * cfg.threshold.factor(bins)).max(peak0 * 10f64.powf(-cfg.dynamic_range_db / 10.0));
    if peak0 <= 0.0 {
        return empty(threshold, peak0);
    }
    let max_iter = cfg.max_iterations.unwrap_or(bins);
    let reach = 2.0 * HALF_WIDTH_BINS as f64;
    let mut comps: Vec<Comp> = Vec::new();
    let mut aborted = false;
    for _ in 0..max_iter {
        let (i, pk) = res.argmax();
        if pk < threshold {
            break;
        }
        let x = res.polish(res.coarse(i));
        let (corr, e) = res.project(x);
        if e <= 0.0 {
            break;
        }
        let c = corr / e;
        res.add(x, -c);
        comps.push(Comp { x, c });

        let cluster: Vec<usize> = (0..comps.len()).filter(|&k| (comps[k].x - x).abs() < reach).collect();
        if cluster.len() > 1 {
            let span = |comps: &[Comp]| {
                let xs = cluster.iter().map(|&k| comps[k].x);
                (xs.clone().fold(f64::INFINITY, f64::min) - reach, xs.fold(f64::NEG_INFINITY, f64::max) + reach)
            };
            let (lo, hi) = span(&comps);
            let mut before = res.energy_in(lo, hi);
            for _ in 0..cfg.refine_passes {
                let mut moved: f64 = 0.0;
                for &k in &cluster {
                    let Comp { x: xk, c: ck } = comps[k];
                    res.add(xk, ck);
                    let nx = res.polish(xk);
                    let (corr, e) = res.project(nx);
                    let nc = if e > 0.0 { corr / e } else { Complex64::new(0.0, 0.0) };
                    res.add(nx, -nc);
                    moved = moved.max((nx - xk).abs());
                    comps[k] = Comp { x: nx, c: nc };
                }
                let (lo, hi) = span(&comps);
                let after = res.energy_in(lo, hi);
                if moved < cfg.refine_tol_bins || before - after < cfg.refine_tol_power * threshold {
                    break;
                }
                before = after;
            }
        }
        let lo = cluster.iter().map(|&k| comps[k].x).fold(x, f64::min) - reach;
        let hi = cluster.iter().map(|&k| comps[k].x).fold(x, f64::max) + reach;
        let delta = res.refresh(lo.floor() as i64, hi.ceil() as i64);
        if delta > 1e-9 * energy {
            aborted = true;
            break;
        }
    }
    let (_, residual_peak) = res.argmax();
    let bin_ns = pulse.bin_ns();
    let detections = comps
        .iter()
        .filter(|c| c.c.norm() > 0.0)
        .map(|c| Detection {
            t: snapshot.t,
            delay_ns: snapshot.reference_delay_ns + c.x * bin_ns,
            amplitude: c.c.norm(),
            phase: c.c.arg().rem_euclid(TAU),
        })
        .collect();
    DetectOutcome { detections, noise_level, threshold, residual_peak, energy, aborted }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::synth::{synth_snapshot, Grid, PathSample};
    use crate::stats::{seeded, StreamRng};

    fn grid() -> Grid {
        Grid { reference_delay_ns: 0.0, bins: 256, bin_ns: 1.0 }
    }

    fn path(id: u64, a: f64, phase: f64, delay: f64) -> PathSample {
        PathSample { id, amplitude: a, phase, delay_ns: delay }
    }

    #[test]
    fn noiseless_single_path_is_exact() {
        let pulse = Pulse::new(1e9);
        let s = synth_snapshot::<StreamRng>(&[path(1, 0.7, 2.0, 100.37)], &grid(), &pulse, 0.0, None).unwrap();
        let out = detect(&s, &pulse, &DetectConfig::default());
        assert_eq!(out.detections.len(), 1, "{:?}", out.detections);
        let d = out.detections[0];
        assert!((d.delay_ns - 100.37).abs() < 1e-3);
        assert!((d.amplitude - 0.7).abs() < 1e-4);
        assert!((d.phase - 2.0).abs() < 1e-3);
    }

    #[test]
    fn residual_ends_below_threshold() {
        let pulse = Pulse::new(1e9);
        let paths = [path(1, 1.0, 0.0, 50.2), path(2, 0.3, 1.0, 58.9), path(3, 0.1, 2.0, 140.5)];
        let mut rng = seeded(4);
        let s = synth_snapshot(&paths, &grid(), &pulse, 0.0, Some((&mut rng, 1e-4))).unwrap();
        let out = detect(&s, &pulse, &DetectConfig::default());
        assert!(!out.aborted);
        assert!(out.residual_peak < out.threshold);
        for p in &paths {
            assert!(out.detections.iter().any(|d| (d.delay_ns - p.delay_ns).abs() < 0.2), "{p:?}");
        }
    }

    #[test]
    fn empty_snapshot_gives_nothing() {
        let pulse = Pulse::new(1e9);
        let s = synth_snapshot::<StreamRng>(&[], &grid(), &pulse, 0.0, None).unwrap();
        assert!(detect(&s, &pulse, &DetectConfig::default()).detections.is_empty());
    }
}
