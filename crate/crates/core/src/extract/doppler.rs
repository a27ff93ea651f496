//! Per-set Doppler from the detections of one short track.

use std::f64::consts::{PI, TAU};

use super::detect::Detection;

/// Residual phase spread above which the carrier-phase refinement is
/// distrusted, radians.
pub const MAX_PHASE_RMS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerEstimate {
    /// From the least-squares delay slope, `ν = -f_c dτ/dt`.
    pub coarse_hz: f64,
    /// Final estimate.
    pub hz: f64,
    /// RMS residual of the phase fit, radians; `None` when not used.
    pub phase_rms: Option<f64>,
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Some((b, my - b * mx))
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Doppler of one path from its detections in one set.
///
/// The delay slope gives an unambiguous but noisy estimate. The carrier
/// phase advances by `2πν` per second; after removing the coarse
/// rotation, the remaining phase is unwrapped and its slope corrects the
/// estimate. The correction is kept only when the phase fit is tight.
pub fn estimate_doppler(dets: &[Detection], carrier: f64) -> Option<DopplerEstimate> {
    let t: Vec<f64> = dets.iter().map(|d| d.t).collect();
    let tau: Vec<f64> = dets.iter().map(|d| d.delay_ns * 1e-9).collect();
    let (b, _) = slope(&t, &tau)?;
    let coarse = -carrier * b;
    let t0 = t[0];
    let mut unwrapped = Vec::with_capacity(dets.len());
    let mut prev = 0.0;
    for (k, d) in dets.iter().enumerate() {
        let r = wrap(d.phase - TAU * coarse * (d.t - t0));
        let v = if k == 0 { r } else { prev + wrap(r - prev) };
        unwrapped.push(v);
        prev = v;
    }
    let (ps, pi) = slope(&t, &unwrapped)?;
    let rms = (t.iter().zip(&unwrapped).map(|(x, y)| (y - (pi + ps * x)).powi(2)).sum::<f64>() / t.len() as f64).sqrt();
    let fine = coarse + ps / TAU;
    if rms <= MAX_PHASE_RMS {
        Some(DopplerEstimate { coarse_hz: coarse, hz: fine, phase_rms: Some(rms) })
    } else {
        Some(DopplerEstimate { coarse_hz: coarse, hz: coarse, phase_rms: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dets(nu: f64, fc: f64, jitter_ns: &[f64]) -> Vec<Detection> {
        jitter_ns
            .iter()
            .enumerate()
            .map(|(k, j)| {
                let t = 0.37 + k as f64 * 4e-4;
                let dt = t - 0.37;
                Detection {
                    t,
                    delay_ns: 200.0 - nu / fc * dt * 1e9 + j,
                    amplitude: 1.0,
                    phase: (0.3 + TAU * nu * dt).rem_euclid(TAU),
                }
            })
            .collect()
    }

    #[test]
    fn exact_data_gives_exact_doppler() {
        let e = estimate_doppler(&dets(1000.0, 5.7e9, &[0.0; 8]), 5.7e9).unwrap();
        assert!((e.coarse_hz - 1000.0).abs() < 1e-6);
        assert!((e.hz - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn phase_removes_delay_jitter() {
        let jitter = [0.02, -0.03, 0.01, 0.0, -0.02, 0.03, -0.01, 0.02];
        for nu in [-1900.0, -150.0, 40.0, 1480.0] {
            let e = estimate_doppler(&dets(nu, 5.7e9, &jitter), 5.7e9).unwrap();
            assert!((e.coarse_hz - nu).abs() > 1.0);
            assert!((e.hz - nu).abs() < 1e-6, "{nu}: {e:?}");
        }
    }

    #[test]
    fn sign_convention_shrinking_delay_is_positive() {
        let e = estimate_doppler(&dets(500.0, 5.7e9, &[0.0; 6]), 5.7e9).unwrap();
        assert!(e.hz > 0.0);
    }
}
