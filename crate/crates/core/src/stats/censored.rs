//! Likelihood fits for incompletely observed samples: values known only to
//! an interval, values known only to exceed a bound, and samples that are
//! visible only above a truncation point.

use serde::{Deserialize, Serialize};

use super::dist::{DistSpec, Family};
use super::fit::fit;
use super::optim::nelder_mead;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    Exact(f64),
    /// The value lies in `[lo, hi)`.
    Interval(f64, f64),
    /// The value is at least this large.
    RightCensored(f64),
}

impl Observation {
    /// A single stand-in value used to seed the search.
    fn representative(&self) -> f64 {
        match *self {
            Observation::Exact(x) | Observation::RightCensored(x) => x,
            Observation::Interval(lo, hi) => 0.5 * (lo + hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    pub obs: Observation,
    /// The sample would not have been recorded at or below this value.
    /// Zero means no truncation.
    pub truncation: f64,
}

impl CensoredSample {
    pub fn exact(x: f64) -> Self {
        CensoredSample { obs: Observation::Exact(x), truncation: 0.0 }
    }
}

/// Probability of `[lo, hi)` under `spec`, taken on whichever tail keeps
/// the difference well conditioned.
fn interval_prob(spec: &DistSpec, lo: f64, hi: f64) -> f64 {
    let (clo, chi) = (spec.cdf(lo), spec.cdf(hi));
    if clo < 0.5 {
        chi - clo
    } else {
        spec.sf(lo) - spec.sf(hi)
    }
}

pub fn log_likelihood(spec: &DistSpec, data: &[CensoredSample]) -> f64 {
    data.iter()
        .map(|s| {
            let mut ll = match s.obs {
                Observation::Exact(x) => spec.ln_density(x),
                Observation::Interval(lo, hi) => interval_prob(spec, lo, hi).ln(),
                Observation::RightCensored(x) => spec.sf(x).ln(),
            };
            if s.truncation > 0.0 {
                ll -= spec.sf(s.truncation).ln();
            }
            ll
        })
        .sum()
}

/// Maximum-likelihood fit of a continuous family to censored and truncated
/// observations. Searches over log-scale parameters (location stays linear
/// for the log-normal), seeded from a plain fit of representative values.
pub fn fit_censored(family: Family, data: &[CensoredSample]) -> Result<DistSpec> {
    if family.is_discrete() {
        return Err(Error::UnsupportedFamily(family.name()));
    }
    let min_n = if family.n_params() == 2 { super::fit::MIN_SHAPE_SAMPLES } else { 1 };
    if data.len() < min_n {
        return Err(Error::InsufficientData(format!(
            "{family} censored fit needs at least {min_n} observations, got {}",
            data.len()
        )));
    }
    for s in data {
        let ok = match s.obs {
            Observation::Exact(x) | Observation::RightCensored(x) => x.is_finite() && x > 0.0,
            Observation::Interval(lo, hi) => lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo,
        };
        if !ok || s.truncation.is_nan() || s.truncation < 0.0 {
            return Err(Error::validation("observations", format!("{:?} is not a valid observation", s)));
        }
    }
    let reps: Vec<f64> = data.iter().map(|s| s.obs.representative().max(f64::MIN_POSITIVE)).collect();
    let seed = fit(family, &reps)?;
    let to_theta = |spec: &DistSpec| -> Vec<f64> {
        let p = spec.param_vec();
        match family {
            Family::LogNormal => vec![p[0], p[1].ln()],
            _ => p.iter().map(|v| v.ln()).collect(),
        }
    };
    let from_theta = |t: &[f64]| -> Option<DistSpec> {
        let p: Vec<f64> = match family {
            Family::LogNormal => vec![t[0], t[1].exp()],
            _ => t.iter().map(|v| v.exp()).collect(),
        };
        DistSpec::from_vec(family, &p).ok()
    };
    let nll = |t: &[f64]| match from_theta(t) {
        Some(spec) => -log_likelihood(&spec, data),
        None => f64::INFINITY,
    };
    let start = to_theta(&seed);
    let step = vec![0.2; start.len()];
    let first = nelder_mead(nll, &start, &step, 1e-11, 6000);
    let best = nelder_mead(nll, &first.x, &step, 1e-11, 6000);
    if !best.value.is_finite() {
        return Err(Error::NoConvergence(format!("{family} censored likelihood is not finite")));
    }
    from_theta(&best.x).ok_or_else(|| Error::NoConvergence(format!("{family} parameters left the domain")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng::seeded;

    #[test]
    fn exact_observations_reproduce_plain_fit() {
        let mut rng = seeded(3);
        let spec = DistSpec::birnbaum_saunders(22.0, 2.3).unwrap();
        let xs = spec.sample_n(3000, &mut rng);
        let plain = fit(Family::BirnbaumSaunders, &xs).unwrap().param_vec();
        let data: Vec<_> = xs.iter().map(|&x| CensoredSample::exact(x)).collect();
        let cens = fit_censored(Family::BirnbaumSaunders, &data).unwrap().param_vec();
        for (a, b) in plain.iter().zip(&cens) {
            assert!(((a - b) / a).abs() < 1e-5, "{plain:?} vs {cens:?}");
        }
    }

    #[test]
    fn truncation_and_binning_are_undone() {
        let mut rng = seeded(4);
        let truth = DistSpec::log_normal(2.0, 1.4).unwrap();
        let floor = 2.5;
        let data: Vec<_> = truth
            .sample_n(20_000, &mut rng)
            .into_iter()
            .filter(|&x| x > floor)
            .map(|x| CensoredSample { obs: Observation::Exact(x), truncation: floor })
            .collect();
        let naive = fit(Family::LogNormal, &data.iter().map(|s| s.obs.representative()).collect::<Vec<_>>())
            .unwrap()
            .param_vec();
        let got = fit_censored(Family::LogNormal, &data).unwrap().param_vec();
        assert!((got[0] - 2.0).abs() < 0.06 && (got[1] - 1.4).abs() < 0.05, "{got:?}");
        assert!((naive[0] - 2.0).abs() > 0.2, "truncation should bias the naive fit");

        // Interval-censored lifetimes on a coarse grid with left truncation.
        let truth = DistSpec::birnbaum_saunders(10.0, 2.0).unwrap();
        let width = 1.7;
        let data: Vec<_> = truth
            .sample_n(20_000, &mut rng)
            .into_iter()
            .filter_map(|x| {
                let k = (x / width).floor();
                (k >= 1.0).then_some(CensoredSample {
                    obs: Observation::Interval(k * width, (k + 1.0) * width),
                    truncation: width,
                })
            })
            .collect();
        let got = fit_censored(Family::BirnbaumSaunders, &data).unwrap().param_vec();
        assert!((got[0] / 10.0 - 1.0).abs() < 0.05 && (got[1] / 2.0 - 1.0).abs() < 0.05, "{got:?}");
    }

    #[test]
    fn right_censoring_is_accounted_for() {
        let mut rng = seeded(8);
        let truth = DistSpec::weibull(5.0, 1.5).unwrap();
        let cap = 6.0;
        let data: Vec<_> = truth
            .sample_n(10_000, &mut rng)
            .into_iter()
            .map(|x| CensoredSample {
                obs: if x >= cap { Observation::RightCensored(cap) } else { Observation::Exact(x) },
                truncation: 0.0,
            })
            .collect();
        let got = fit_censored(Family::Weibull, &data).unwrap().param_vec();
        assert!((got[0] / 5.0 - 1.0).abs() < 0.04 && (got[1] / 1.5 - 1.0).abs() < 0.04, "{got:?}");
    }

    #[test]
    fn discrete_family_rejected() {
        assert!(matches!(
            fit_censored(Family::Poisson, &[CensoredSample::exact(1.0)]),
            Err(Error::UnsupportedFamily(_))
        ));
    }
}
