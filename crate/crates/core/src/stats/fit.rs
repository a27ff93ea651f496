//! Maximum-likelihood fitting for every [`Family`].
//!
//! Closed forms where they exist (Poisson, exponential, log-normal). Weibull,
//! Gamma and Birnbaum–Saunders reduce to one scalar equation solved by a
//! bracketed Newton/secant iteration to a relative tolerance of `1e-9`
//! within 200 steps. The discretized families are fitted on their exact
//! integer likelihood with a simplex search.

use std::collections::BTreeMap;

use statrs::function::gamma::digamma;

use super::dist::{DistSpec, Family, Params};
use super::optim::nelder_mead;
use crate::error::{Error, Result};

pub const ROOT_TOL: f64 = 1e-9;
pub const MAX_ITER: usize = 200;
/// Smallest sample size accepted for two-parameter families.
pub const MIN_SHAPE_SAMPLES: usize = 10;

pub fn fit(family: Family, samples: &[f64]) -> Result<DistSpec> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("cannot fit an empty sample".into()));
    }
    check_support(family, samples)?;
    let n = samples.len();
    if family.n_params() == 2 {
        if n < MIN_SHAPE_SAMPLES {
            return Err(Error::InsufficientData(format!(
                "{family} fit needs at least {MIN_SHAPE_SAMPLES} samples, got {n}"
            )));
        }
        let first = samples[0];
        if samples.iter().all(|&x| x == first) {
            return Err(Error::DegenerateFit(format!("all {n} samples equal {first}")));
        }
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    match family {
        Family::Poisson => {
            if mean <= 0.0 {
                return Err(Error::DegenerateFit("all counts are zero".into()));
            }
            DistSpec::poisson(mean)
        }
        Family::Exponential => {
            if mean <= 0.0 {
                return Err(Error::DegenerateFit("all samples are zero".into()));
            }
            DistSpec::exponential(mean)
        }
        Family::LogNormal => {
            let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
            let psi = logs.iter().sum::<f64>() / n as f64;
            let rho = (logs.iter().map(|l| (l - psi).powi(2)).sum::<f64>() / n as f64).sqrt();
            DistSpec::log_normal(psi, rho)
        }
        Family::Weibull => fit_weibull(samples),
        Family::Gamma => fit_gamma(samples),
        Family::BirnbaumSaunders => fit_birnbaum_saunders(samples),
        Family::DiscretizedNormal => fit_discretized(family, samples),
        Family::DiscretizedGamma => fit_discretized(family, samples),
    }
}

fn check_support(family: Family, samples: &[f64]) -> Result<()> {
    for (i, &x) in samples.iter().enumerate() {
        let ok = if family.is_discrete() {
            x.is_finite() && x >= 0.0 && x.fract() == 0.0
        } else if family == Family::Exponential {
            x.is_finite() && x >= 0.0
        } else {
            x.is_finite() && x > 0.0
        };
        if !ok {
            return Err(Error::validation("samples", format!("sample {i} = {x} lies outside the {family} support")));
        }
    }
    Ok(())
}

/// Root of a monotone `f` inside `[lo, hi]` (sign change required), secant
/// steps kept inside the bracket and bisection as fallback.
pub(crate) fn bracketed_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoConvergence(format!("no sign change in [{lo}, {hi}]")));
    }
    let mut fhi = fhi;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        let mid = 0.5 * (lo + hi);
        let next = if secant.is_finite() && secant > lo && secant < hi { secant } else { mid };
        // Alternate to bisection whenever the secant step stalls on one side.
        let next = if (next - x).abs() < 0.25 * (hi - lo) { next } else { mid };
        x = next;
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if hi - lo <= tol * x.abs().max(1e-300) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NoConvergence(format!("root not isolated within {MAX_ITER} iterations")))
}

/// Expand `[lo, hi]` geometrically until `f` changes sign.
fn expand_bracket(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    for _ in 0..200 {
        if f(lo).signum() != f(hi).signum() {
            return Ok((lo, hi));
        }
        lo *= 0.5;
        hi *= 2.0;
    }
    Err(Error::NoConvergence("could not bracket the score equation".into()))
}

fn fit_weibull(samples: &[f64]) -> Result<DistSpec> {
    let n = samples.len() as f64;
    let xmax = samples.iter().cloned().fold(f64::MIN, f64::max);
    // Work with y = ln(x / xmax) <= 0 so x^κ never overflows.
    let ys: Vec<f64> = samples.iter().map(|x| (x / xmax).ln()).collect();
    let ybar = ys.iter().sum::<f64>() / n;
    // Profile score in κ: weighted mean of y under weights e^{κy}, minus
    // the plain mean, minus 1/κ. Strictly increasing in κ.
    let score = |k: f64| {
        let (mut w, mut wy) = (0.0, 0.0);
        for &y in &ys {
            let e = (k * y).exp();
            w += e;
            wy += e * y;
        }
        wy / w - ybar - 1.0 / k
    };
    let sd = (ys.iter().map(|y| (y - ybar).powi(2)).sum::<f64>() / n).sqrt();
    let k0 = 1.28 / sd;
    let (lo, hi) = expand_bracket(&score, 0.5 * k0, 2.0 * k0)?;
    let kappa = bracketed_root(score, lo, hi, ROOT_TOL * 1e-3)?;
    let mean_pow = ys.iter().map(|y| (kappa * y).exp()).sum::<f64>() / n;
    DistSpec::weibull(xmax * mean_pow.powf(1.0 / kappa), kappa)
}

/// Trigamma via recurrence to x >= 20 and the asymptotic series.
fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

fn fit_gamma(samples: &[f64]) -> Result<DistSpec> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mean_log = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    if s <= 0.0 {
        return Err(Error::DegenerateFit("no spread in log-sample".into()));
    }
    // ln k - ψ(k) = s, decreasing in k. Start from the Minka approximation,
    // Newton with the bracket kept as a safeguard.
    let g = |k: f64| k.ln() - digamma(k) - s;
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let (mut lo, mut hi) = expand_bracket(&g, 0.5 * k, 2.0 * k)?;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let gk = g(k);
        if gk > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let step = gk / (1.0 / k - trigamma(k));
        let mut next = k - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= ROOT_TOL * 1e-3 * next {
            k = next;
            converged = true;
            break;
        }
        k = next;
    }
    if !converged {
        return Err(Error::NoConvergence("Gamma shape iteration".into()));
    }
    DistSpec::gamma(k, mean / k)
}

fn fit_birnbaum_saunders(samples: &[f64]) -> Result<DistSpec> {
    let n = samples.len() as f64;
    let s = samples.iter().sum::<f64>() / n;
    let r = n / samples.iter().map(|x| 1.0 / x).sum::<f64>();
    // K(η): harmonic mean of η + x_i.
    let k = |eta: f64| n / samples.iter().map(|x| 1.0 / (eta + x)).sum::<f64>();
    let h = |eta: f64| {
        let ke = k(eta);
        eta * eta - eta * (2.0 * r + ke) + r * (s + ke)
    };
    // The likelihood root lies between the harmonic and arithmetic means;
    // the moment estimate √(s·r) sits inside that bracket and seeds the
    // secant iteration.
    let eta0 = (s * r).sqrt();
    let (lo, hi) = if h(r).signum() != h(eta0).signum() { (r, eta0) } else { (eta0, s) };
    let eta = bracketed_root(h, lo, hi, ROOT_TOL)?;
    let gamma2 = s / eta + eta / r - 2.0;
    if gamma2 <= 0.0 {
        return Err(Error::DegenerateFit("Birnbaum-Saunders shape collapsed to zero".into()));
    }
    DistSpec::birnbaum_saunders(eta, gamma2.sqrt())
}

fn fit_discretized(family: Family, samples: &[f64]) -> Result<DistSpec> {
    let n = samples.len() as f64;
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    for &x in samples {
        *counts.entry(x as u64).or_default() += 1.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let build = |t: &[f64]| -> Option<DistSpec> {
        match family {
            Family::DiscretizedNormal => DistSpec::discretized_normal(t[0], t[1].exp()).ok(),
            _ => DistSpec::discretized_gamma(t[0].exp(), t[1].exp()).ok(),
        }
    };
    let nll = |t: &[f64]| -> f64 {
        let Some(spec) = build(t) else { return f64::INFINITY };
        -counts.iter().map(|(&k, &c)| c * spec.density(k as f64).ln()).sum::<f64>()
    };
    let (start, step) = match family {
        Family::DiscretizedNormal => {
            let sd = var.sqrt().max(0.3);
            (vec![mean, sd.ln()], vec![0.5 * sd, 0.3])
        }
        _ => {
            // Moments of the continuous law behind the rounding.
            let m = mean.max(0.5);
            let v = var.max(0.25);
            (vec![(m * m / v).ln(), (v / m).ln()], vec![0.3, 0.3])
        }
    };
    let mut best = nelder_mead(nll, &start, &step, 1e-12, 4000);
    // One restart around the optimum guards against a collapsed simplex.
    best = nelder_mead(nll, &best.x, &step, 1e-12, 4000);
    if !best.converged {
        return Err(Error::NoConvergence(format!("{family} likelihood search")));
    }
    build(&best.x).ok_or_else(|| Error::NoConvergence(format!("{family} parameters left the domain")))
}

/// Parameters of `spec` as a map from name to value, for reports.
pub fn named_params(spec: &DistSpec) -> Vec<(&'static str, f64)> {
    match spec.params() {
        Params::Poisson { lambda } => vec![("lambda", lambda)],
        Params::DiscretizedNormal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
        Params::DiscretizedGamma { shape, scale } | Params::Gamma { shape, scale } => {
            vec![("shape", shape), ("scale", scale)]
        }
        Params::BirnbaumSaunders { eta, gamma } => vec![("eta", eta), ("gamma", gamma)],
        Params::LogNormal { psi, rho } => vec![("psi", psi), ("rho", rho)],
        Params::Weibull { zeta, kappa } => vec![("zeta", zeta), ("kappa", kappa)],
        Params::Exponential { mean } => vec![("mean", mean)],
    }
}
