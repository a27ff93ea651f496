//! Grouping of distance-tagged values into fixed-width distance bins.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stats::LambdaBin;

pub const DEFAULT_BIN_WIDTH_M: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    /// Lower edge, m; the bin is `[lo, lo + width)`.
    pub lo: f64,
    pub center: f64,
    pub values: Vec<f64>,
}

impl DistanceBin {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance; zero for a single value.
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    pub fn lambda_bin(&self) -> LambdaBin {
        LambdaBin { d_center: self.center, mean: self.mean(), n: self.n() }
    }
}

/// Non-empty bins of `width` metres in increasing distance, centred at
/// `width/2, 3 width/2, ...`.
pub fn bin_by_distance(samples: impl IntoIterator<Item = (f64, f64)>, width: f64) -> Vec<DistanceBin> {
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (d, v) in samples {
        bins.entry((d / width).floor() as i64).or_default().push(v);
    }
    bins.into_iter()
        .map(|(k, values)| {
            let lo = k as f64 * width;
            DistanceBin { lo, center: lo + width / 2.0, values }
        })
        .collect()
}
