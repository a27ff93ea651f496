use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::dist::DistSpec;
use crate::error::{Error, Result};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;
/// Minimum expected count per χ² bin after merging.
pub const MIN_EXPECTED: f64 = 5.0;
pub const CHI2_MIN_SAMPLES: usize = 30;
pub const KS_MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub n: usize,
    /// Degrees of freedom, χ² only.
    pub dof: Option<usize>,
}

impl GofResult {
    fn new(statistic: f64, p_value: f64, significance: f64, n: usize, dof: Option<usize>) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        GofResult { statistic, p_value, reject: p_value < significance, n, dof }
    }
}

/// Pearson χ² test of `samples` against `spec`, with `fitted` parameters
/// estimated from the same data.
///
/// Discrete families start from one bin per integer plus an upper tail bin;
/// continuous families from `ceil(2 n^0.4)` equiprobable bins. Bins are then
/// merged left to right until each expected count reaches 5, and a short
/// final remainder is folded into its left neighbour.
pub fn chi2_gof(samples: &[f64], spec: &DistSpec, fitted: usize, significance: f64) -> Result<GofResult> {
    let n = samples.len();
    if n < CHI2_MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "chi-square test needs at least {CHI2_MIN_SAMPLES} samples, got {n}"
        )));
    }
    let nf = n as f64;
    // (upper edge, expected, observed); edges are inclusive upper bounds for
    // discrete bins and exclusive for continuous ones.
    let mut bins: Vec<(f64, f64, f64)> = Vec::new();
    if spec.is_discrete() {
        let top_sample = samples.iter().cloned().fold(0.0, f64::max);
        let top = top_sample.max(spec.quantile(1.0 - 1e-9));
        let mut prev_cdf = 0.0;
        let mut k = 0.0;
        while k < top {
            let c = spec.cdf(k);
            bins.push((k, nf * (c - prev_cdf), 0.0));
            prev_cdf = c;
            k += 1.0;
        }
        bins.push((f64::INFINITY, nf * (1.0 - prev_cdf), 0.0));
        for &x in samples {
            let i = (x.max(0.0) as usize).min(bins.len() - 1);
            bins[i].2 += 1.0;
        }
    } else {
        let k = ((2.0 * nf.powf(0.4)).ceil() as usize).max(3);
        let edges: Vec<f64> = (1..k).map(|i| spec.quantile(i as f64 / k as f64)).collect();
        for i in 0..k {
            let hi = edges.get(i).copied().unwrap_or(f64::INFINITY);
            bins.push((hi, nf / k as f64, 0.0));
        }
        for &x in samples {
            let i = edges.partition_point(|&e| e <= x);
            bins[i].2 += 1.0;
        }
    }

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for &(_, e, o) in &bins {
        e_acc += e;
        o_acc += o;
        if e_acc >= MIN_EXPECTED {
            merged.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += e_acc;
                last.1 += o_acc;
            }
            None => merged.push((e_acc, o_acc)),
        }
    }
    let usable = merged.len();
    if usable < 3 || usable <= 1 + fitted {
        return Err(Error::InsufficientBins(usable));
    }
    let statistic: f64 = merged.iter().map(|&(e, o)| (o - e).powi(2) / e).sum();
    let dof = usable - 1 - fitted;
    let p = gamma_ur(dof as f64 / 2.0, statistic / 2.0);
    Ok(GofResult::new(statistic, p, significance, n, Some(dof)))
}

/// Kolmogorov distribution tail `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small λ.
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        let mut term_pow = y;
        let y8 = y.powi(8);
        // Σ_{j>=1} y^{(2j-1)^2}
        let mut j = 1;
        while j < 50 {
            s += term_pow;
            let next = term_pow * y8.powi(j);
            if next < 1e-300 {
                break;
            }
            term_pow = next;
            j += 1;
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        for j in 1..100 {
            let jf = j as f64;
            let t = (-2.0 * jf * jf * lambda * lambda).exp();
            s += if j % 2 == 1 { t } else { -t };
            if t < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample KS test with the Stephens small-sample correction on the
/// asymptotic Kolmogorov p-value.
pub fn ks_test(samples: &[f64], spec: &DistSpec, significance: f64) -> Result<GofResult> {
    if spec.is_discrete() {
        return Err(Error::UnsupportedFamily(spec.family().name()));
    }
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::InsufficientData(format!("KS test needs at least {KS_MIN_SAMPLES} samples, got {n}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = spec.cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    let p = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
    Ok(GofResult::new(d, p, significance, n, None))
}

/// Mean squared difference between the empirical and model CDFs.
///
/// Continuous families: at each sorted sample point, against the plotting
/// position `(i - 1/2)/n`. Discrete families: on every integer between the
/// sample minimum and maximum, against the empirical step CDF there, since
/// ties make per-sample plotting positions ill-defined.
pub fn cdf_mse(samples: &[f64], spec: &DistSpec) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("CDF MSE needs at least 2 samples, got {n}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    if spec.is_discrete() {
        let (lo, hi) = (xs[0].floor() as i64, xs[n - 1].floor() as i64);
        let mut sum = 0.0;
        for k in lo..=hi {
            let kf = k as f64;
            let emp = xs.partition_point(|&x| x <= kf) as f64 / nf;
            sum += (emp - spec.cdf(kf)).powi(2);
        }
        Ok(sum / (hi - lo + 1) as f64)
    } else {
        Ok(xs.iter().enumerate().map(|(i, &x)| ((i as f64 + 0.5) / nf - spec.cdf(x)).powi(2)).sum::<f64>() / nf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng::seeded;

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        // Both series converge at λ = 1.18; compare them directly there.
        let lambda: f64 = 1.18;
        let mut alt = 0.0;
        for j in 1..100 {
            let jf = j as f64;
            let t = (-2.0 * jf * jf * lambda * lambda).exp();
            alt += if j % 2 == 1 { 2.0 * t } else { -2.0 * t };
        }
        assert!((kolmogorov_sf(1.1799999) - alt).abs() < 1e-7);
        // Tabulated: P(K > 1.36) ≈ 0.0494, P(K > 1.63) ≈ 0.0098.
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 5e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 5e-4);
    }

    #[test]
    fn chi2_rejects_gross_mismatch_and_small_n() {
        let mut rng = seeded(1);
        let xs = DistSpec::poisson(12.2).unwrap().sample_n(500, &mut rng);
        let wrong = DistSpec::discretized_normal(40.0, 3.0).unwrap();
        assert!(chi2_gof(&xs, &wrong, 0, 0.05).unwrap().reject);
        assert!(matches!(chi2_gof(&xs[..10], &wrong, 0, 0.05), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn chi2_merged_bins_meet_expected_minimum() {
        // A Poisson with a tiny mean leaves only a couple of mergeable bins.
        let xs = vec![0.0; 40];
        let spec = DistSpec::poisson(0.05).unwrap();
        assert!(matches!(chi2_gof(&xs, &spec, 1, 0.05), Err(Error::InsufficientBins(_))));
    }

    #[test]
    fn perfect_quantile_samples() {
        let spec = DistSpec::weibull(1.317, 1.306).unwrap();
        let n = 400;
        let xs: Vec<f64> = (0..n).map(|i| spec.quantile((i as f64 + 0.5) / n as f64)).collect();
        let ks = ks_test(&xs, &spec, 0.05).unwrap();
        assert!(ks.statistic <= 1.0 / n as f64 + 1e-12);
        assert!(cdf_mse(&xs, &spec).unwrap() < 1e-3 / (n * n) as f64);
    }

    #[test]
    fn ks_unsupported_for_discrete() {
        let xs = vec![1.0; 20];
        assert!(matches!(ks_test(&xs, &DistSpec::poisson(1.0).unwrap(), 0.05), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn cdf_mse_separates_good_and_bad_fits() {
        let mut rng = seeded(2);
        let spec = DistSpec::weibull(1.317, 1.306).unwrap();
        let xs = spec.sample_n(20_000, &mut rng);
        let good = cdf_mse(&xs, &spec).unwrap();
        let bad = cdf_mse(&xs, &DistSpec::weibull(4.0, 1.306).unwrap()).unwrap();
        assert!(good < 1e-4, "{good}");
        assert!(bad > 1e-2, "{bad}");
    }
}
