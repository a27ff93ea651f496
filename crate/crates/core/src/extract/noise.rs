use num_complex::Complex32;
use serde::{Deserialize, Serialize};

/// Mean per-bin noise power, estimated as `median(|h|²) / ln 2`.
///
/// For complex Gaussian noise `|h|²` is exponential, whose median is
/// `ln 2` times its mean; the median ignores a sparse set of strong paths.
pub fn estimate_noise_floor(h: &[Complex32]) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let mut p: Vec<f64> = h.iter().map(|c| c.norm_sqr() as f64).collect();
    let mid = p.len() / 2;
    let (_, m, _) = p.select_nth_unstable_by(mid, f64::total_cmp);
    *m / std::f64::consts::LN_2
}

/// Detection threshold relative to the estimated noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// Fixed margin above the mean noise level, in dB.
    OffsetDb { db: f64 },
    /// Margin chosen so that a snapshot of pure noise yields any detection
    /// with probability `p`: each bin exceeds `c·level` with probability
    /// `e^{-c}`, so `c = ln(U / p)`.
    FalseAlarm { p: f64 },
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::OffsetDb { db: 6.0 }
    }
}

impl Threshold {
    /// Multiplier applied to the noise level for a grid of `bins` bins.
    pub fn factor(&self, bins: usize) -> f64 {
        match *self {
            Threshold::OffsetDb { db } => 10f64.powf(db / 10.0),
            Threshold::FalseAlarm { p } => (bins.max(1) as f64 / p).ln().max(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::seeded;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, power: f64, seed: u64) -> Vec<Complex32> {
        let mut rng = seeded(seed);
        let s = (power / 2.0).sqrt();
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex32::new((s * re) as f32, (s * im) as f32)
            })
            .collect()
    }

    #[test]
    fn white_noise_level_within_ten_percent() {
        for seed in 0..20 {
            let est = estimate_noise_floor(&noise(4096, 3.0, seed));
            assert!((est / 3.0 - 1.0).abs() < 0.1, "{est}");
        }
    }

    #[test]
    fn zero_snapshot_has_zero_level() {
        assert_eq!(estimate_noise_floor(&vec![Complex32::new(0.0, 0.0); 256]), 0.0);
    }

    #[test]
    fn strong_path_barely_moves_the_median() {
        let mut h = noise(4096, 1.0, 9);
        for (k, v) in h.iter_mut().skip(2000).take(17).enumerate() {
            *v += Complex32::new(100.0 / (1.0 + k as f32), 0.0);
        }
        let est = estimate_noise_floor(&h);
        assert!((est - 1.0).abs() < 0.15, "{est}");
    }

    #[test]
    fn threshold_factors() {
        assert!((Threshold::default().factor(1000) - 3.981).abs() < 1e-3);
        let f = Threshold::FalseAlarm { p: 0.01 }.factor(1000);
        assert!((f - (1e5f64).ln()).abs() < 1e-12);
    }
}
