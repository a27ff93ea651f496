use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::Rng;
use rand_distr::{
    Distribution, Exp, Gamma as GammaSampler, LogNormal as LogNormalSampler, Normal, Poisson as PoissonSampler,
    StandardNormal, Weibull as WeibullSampler,
};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Poisson,
    DiscretizedNormal,
    DiscretizedGamma,
    BirnbaumSaunders,
    LogNormal,
    Weibull,
    Exponential,
    Gamma,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Poisson,
        Family::DiscretizedNormal,
        Family::DiscretizedGamma,
        Family::BirnbaumSaunders,
        Family::LogNormal,
        Family::Weibull,
        Family::Exponential,
        Family::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "Poisson",
            Family::DiscretizedNormal => "discretized Normal",
            Family::DiscretizedGamma => "discretized Gamma",
            Family::BirnbaumSaunders => "Birnbaum-Saunders",
            Family::LogNormal => "log-normal",
            Family::Weibull => "Weibull",
            Family::Exponential => "exponential",
            Family::Gamma => "Gamma",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Family::Poisson | Family::DiscretizedNormal | Family::DiscretizedGamma)
    }

    pub fn n_params(self) -> usize {
        match self {
            Family::Poisson | Family::Exponential => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw parameter vectors, one variant per family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Params {
    Poisson { lambda: f64 },
    DiscretizedNormal { mu: f64, sigma: f64 },
    DiscretizedGamma { shape: f64, scale: f64 },
    BirnbaumSaunders { eta: f64, gamma: f64 },
    LogNormal { psi: f64, rho: f64 },
    Weibull { zeta: f64, kappa: f64 },
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
}

/// A validated distribution. Construct through [`DistSpec::new`] or one of
/// the family shorthands; parameters are checked once, up front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Params", into = "Params")]
pub struct DistSpec {
    params: Params,
}

impl TryFrom<Params> for DistSpec {
    type Error = Error;

    fn try_from(params: Params) -> Result<Self> {
        DistSpec::new(params)
    }
}

impl From<DistSpec> for Params {
    fn from(spec: DistSpec) -> Params {
        spec.params
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal upper tail `1 - Φ(z)`, accurate for large `z`.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `Φ(b) - Φ(a)` for `a <= b`, evaluated on the tail that keeps precision.
fn norm_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        norm_sf(a) - norm_sf(b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

fn as_count(x: f64) -> Option<u64> {
    (x >= 0.0 && x.fract() == 0.0 && x.is_finite()).then_some(x as u64)
}

impl DistSpec {
    pub fn new(params: Params) -> Result<Self> {
        match params {
            Params::Poisson { lambda } => positive("lambda", lambda)?,
            Params::DiscretizedNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::validation("mu", "must be finite"));
                }
                positive("sigma", sigma)?;
            }
            Params::DiscretizedGamma { shape, scale } | Params::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
            Params::BirnbaumSaunders { eta, gamma } => {
                positive("eta", eta)?;
                positive("gamma", gamma)?;
            }
            Params::LogNormal { psi, rho } => {
                if !psi.is_finite() {
                    return Err(Error::validation("psi", "must be finite"));
                }
                positive("rho", rho)?;
            }
            Params::Weibull { zeta, kappa } => {
                positive("zeta", zeta)?;
                positive("kappa", kappa)?;
            }
            Params::Exponential { mean } => positive("mean", mean)?,
        }
        Ok(DistSpec { params })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::new(Params::Poisson { lambda })
    }
    pub fn discretized_normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Params::DiscretizedNormal { mu, sigma })
    }
    pub fn discretized_gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Params::DiscretizedGamma { shape, scale })
    }
    pub fn birnbaum_saunders(eta: f64, gamma: f64) -> Result<Self> {
        Self::new(Params::BirnbaumSaunders { eta, gamma })
    }
    pub fn log_normal(psi: f64, rho: f64) -> Result<Self> {
        Self::new(Params::LogNormal { psi, rho })
    }
    pub fn weibull(zeta: f64, kappa: f64) -> Result<Self> {
        Self::new(Params::Weibull { zeta, kappa })
    }
    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(Params::Exponential { mean })
    }
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Params::Gamma { shape, scale })
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn family(&self) -> Family {
        match self.params {
            Params::Poisson { .. } => Family::Poisson,
            Params::DiscretizedNormal { .. } => Family::DiscretizedNormal,
            Params::DiscretizedGamma { .. } => Family::DiscretizedGamma,
            Params::BirnbaumSaunders { .. } => Family::BirnbaumSaunders,
            Params::LogNormal { .. } => Family::LogNormal,
            Params::Weibull { .. } => Family::Weibull,
            Params::Exponential { .. } => Family::Exponential,
            Params::Gamma { .. } => Family::Gamma,
        }
    }

    /// Parameters in declaration order, e.g. `[eta, gamma]` for BS.
    pub fn param_vec(&self) -> Vec<f64> {
        match self.params {
            Params::Poisson { lambda } => vec![lambda],
            Params::Exponential { mean } => vec![mean],
            Params::DiscretizedNormal { mu: a, sigma: b }
            | Params::DiscretizedGamma { shape: a, scale: b }
            | Params::BirnbaumSaunders { eta: a, gamma: b }
            | Params::LogNormal { psi: a, rho: b }
            | Params::Weibull { zeta: a, kappa: b }
            | Params::Gamma { shape: a, scale: b } => vec![a, b],
        }
    }

    /// Build a spec of `family` from a parameter vector in declaration order.
    pub fn from_vec(family: Family, p: &[f64]) -> Result<Self> {
        let need = family.n_params();
        if p.len() != need {
            return Err(Error::validation("params", format!("{family} takes {need} parameters")));
        }
        Self::new(match family {
            Family::Poisson => Params::Poisson { lambda: p[0] },
            Family::Exponential => Params::Exponential { mean: p[0] },
            Family::DiscretizedNormal => Params::DiscretizedNormal { mu: p[0], sigma: p[1] },
            Family::DiscretizedGamma => Params::DiscretizedGamma { shape: p[0], scale: p[1] },
            Family::BirnbaumSaunders => Params::BirnbaumSaunders { eta: p[0], gamma: p[1] },
            Family::LogNormal => Params::LogNormal { psi: p[0], rho: p[1] },
            Family::Weibull => Params::Weibull { zeta: p[0], kappa: p[1] },
            Family::Gamma => Params::Gamma { shape: p[0], scale: p[1] },
        })
    }

    pub fn is_discrete(&self) -> bool {
        self.family().is_discrete()
    }

    /// Mass of integer `k` for the discrete families.
    fn mass(&self, k: u64) -> f64 {
        let kf = k as f64;
        match self.params {
            Params::Poisson { lambda } => (kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)).exp(),
            Params::DiscretizedNormal { mu, sigma } => {
                let z = norm_sf((-0.5 - mu) / sigma);
                norm_interval((kf - 0.5 - mu) / sigma, (kf + 0.5 - mu) / sigma) / z
            }
            Params::DiscretizedGamma { shape, scale } => {
                let upper = gamma_lr(shape, (kf + 0.5) / scale);
                let lower = if k == 0 { 0.0 } else { gamma_lr(shape, (kf - 0.5) / scale) };
                upper - lower
            }
            _ => unreachable!("mass() on a continuous family"),
        }
    }

    /// Probability mass (discrete families) or density (continuous families).
    /// Points outside the support give zero.
    pub fn density(&self, x: f64) -> f64 {
        if self.is_discrete() {
            return as_count(x).map_or(0.0, |k| self.mass(k));
        }
        if x.is_nan() || x < 0.0 {
            return 0.0;
        }
        match self.params {
            Params::BirnbaumSaunders { eta, gamma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (a, b) = ((x / eta).sqrt(), (eta / x).sqrt());
                (a + b) / (2.0 * gamma * x) * norm_pdf((a - b) / gamma)
            }
            Params::LogNormal { psi, rho } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - psi) / rho;
                norm_pdf(z) / (x * rho)
            }
            Params::Weibull { zeta, kappa } => {
                if x == 0.0 {
                    return match kappa {
                        k if k < 1.0 => f64::INFINITY,
                        1.0 => 1.0 / zeta,
                        _ => 0.0,
                    };
                }
                let r = x / zeta;
                kappa / zeta * r.powf(kappa - 1.0) * (-r.powf(kappa)).exp()
            }
            Params::Exponential { mean } => (-x / mean).exp() / mean,
            Params::Gamma { shape, scale } => {
                if x == 0.0 {
                    return match shape {
                        k if k < 1.0 => f64::INFINITY,
                        1.0 => 1.0 / scale,
                        _ => 0.0,
                    };
                }
                ((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()).exp()
            }
            _ => unreachable!(),
        }
    }

    /// Natural log of [`density`](Self::density); `-inf` outside the support.
    pub fn ln_density(&self, x: f64) -> f64 {
        match self.params {
            Params::LogNormal { psi, rho } if x > 0.0 => {
                let z = (x.ln() - psi) / rho;
                -0.5 * z * z - (2.0 * PI).ln() * 0.5 - x.ln() - rho.ln()
            }
            Params::Weibull { zeta, kappa } if x > 0.0 => {
                let r = x / zeta;
                kappa.ln() - zeta.ln() + (kappa - 1.0) * r.ln() - r.powf(kappa)
            }
            Params::BirnbaumSaunders { eta, gamma } if x > 0.0 => {
                let (a, b) = ((x / eta).sqrt(), (eta / x).sqrt());
                let z = (a - b) / gamma;
                (a + b).ln() - (2.0 * gamma * x).ln() - 0.5 * z * z - 0.5 * (2.0 * PI).ln()
            }
            Params::Gamma { shape, scale } if x > 0.0 => {
                (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
            }
            Params::Poisson { lambda } => match as_count(x) {
                Some(k) => k as f64 * lambda.ln() - lambda - ln_gamma(x + 1.0),
                None => f64::NEG_INFINITY,
            },
            _ => self.density(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if self.is_discrete() {
            if x < 0.0 {
                return 0.0;
            }
            if x.is_infinite() {
                return 1.0;
            }
            let k = x.floor();
            return match self.params {
                Params::Poisson { lambda } => gamma_ur(k + 1.0, lambda),
                Params::DiscretizedNormal { mu, sigma } => {
                    let z = norm_sf((-0.5 - mu) / sigma);
                    1.0 - norm_sf((k + 0.5 - mu) / sigma) / z
                }
                Params::DiscretizedGamma { shape, scale } => gamma_lr(shape, (k + 0.5) / scale),
                _ => unreachable!(),
            };
        }
        if x <= 0.0 {
            return 0.0;
        }
        if x.is_infinite() {
            return 1.0;
        }
        match self.params {
            Params::BirnbaumSaunders { eta, gamma } => norm_cdf(((x / eta).sqrt() - (eta / x).sqrt()) / gamma),
            Params::LogNormal { psi, rho } => norm_cdf((x.ln() - psi) / rho),
            Params::Weibull { zeta, kappa } => -(-(x / zeta).powf(kappa)).exp_m1(),
            Params::Exponential { mean } => -(-x / mean).exp_m1(),
            Params::Gamma { shape, scale } => gamma_lr(shape, x / scale),
            _ => unreachable!(),
        }
    }

    /// Survival function `1 - F(x)`, evaluated directly where the family
    /// allows it so far tails keep their precision.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 && !self.is_discrete() {
            return 1.0;
        }
        match self.params {
            Params::BirnbaumSaunders { eta, gamma } => norm_sf(((x / eta).sqrt() - (eta / x).sqrt()) / gamma),
            Params::LogNormal { psi, rho } => norm_sf((x.ln() - psi) / rho),
            Params::Weibull { zeta, kappa } => (-(x / zeta).powf(kappa)).exp(),
            Params::Exponential { mean } => (-x / mean).exp(),
            Params::Gamma { shape, scale } => gamma_ur(shape, x / scale),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Inverse CDF. For discrete families the smallest integer `k` with
    /// `F(k) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        match self.params {
            Params::BirnbaumSaunders { eta, gamma } => {
                let h = 0.5 * gamma * norm_quantile(p);
                eta * (h + (h * h + 1.0).sqrt()).powi(2)
            }
            Params::LogNormal { psi, rho } => (psi + rho * norm_quantile(p)).exp(),
            Params::Weibull { zeta, kappa } => zeta * (-(-p).ln_1p()).powf(1.0 / kappa),
            Params::Exponential { mean } => -mean * (-p).ln_1p(),
            Params::Gamma { shape, scale } => gamma_quantile(shape, scale, p),
            _ => {
                let mut k = (self.mean() - 8.0 * self.std_dev()).floor().max(0.0);
                while self.cdf(k) < p {
                    k += 1.0;
                }
                while k > 0.0 && self.cdf(k - 1.0) >= p {
                    k -= 1.0;
                }
                k
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self.params {
            Params::Poisson { lambda } => lambda,
            Params::DiscretizedNormal { mu, sigma } => {
                // Truncated (at -1/2) normal mean; the rounding offsets cancel.
                let a = (-0.5 - mu) / sigma;
                mu + sigma * norm_pdf(a) / norm_sf(a)
            }
            Params::DiscretizedGamma { shape, scale } => shape * scale,
            Params::BirnbaumSaunders { eta, gamma } => eta * (1.0 + 0.5 * gamma * gamma),
            Params::LogNormal { psi, rho } => (psi + 0.5 * rho * rho).exp(),
            Params::Weibull { zeta, kappa } => zeta * statrs::function::gamma::gamma(1.0 + 1.0 / kappa),
            Params::Exponential { mean } => mean,
            Params::Gamma { shape, scale } => shape * scale,
        }
    }

    /// Standard deviation of the underlying continuous law, used for search
    /// brackets.
    fn std_dev(&self) -> f64 {
        match self.params {
            Params::Poisson { lambda } => lambda.sqrt(),
            Params::DiscretizedNormal { sigma, .. } => sigma,
            Params::DiscretizedGamma { shape, scale } | Params::Gamma { shape, scale } => shape.sqrt() * scale,
            _ => self.mean(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.params {
            Params::Poisson { lambda } => PoissonSampler::new(lambda).expect("validated").sample(rng),
            Params::DiscretizedNormal { mu, sigma } => {
                let normal = Normal::new(mu, sigma).expect("validated");
                loop {
                    let k = (normal.sample(rng) + 0.5).floor();
                    if k >= 0.0 {
                        return k;
                    }
                }
            }
            Params::DiscretizedGamma { shape, scale } => {
                let g = GammaSampler::new(shape, scale).expect("validated");
                (g.sample(rng) + 0.5).floor()
            }
            Params::BirnbaumSaunders { eta, gamma } => {
                let z: f64 = StandardNormal.sample(rng);
                let h = 0.5 * gamma * z;
                eta * (h + (h * h + 1.0).sqrt()).powi(2)
            }
            Params::LogNormal { psi, rho } => LogNormalSampler::new(psi, rho).expect("validated").sample(rng),
            Params::Weibull { zeta, kappa } => WeibullSampler::new(zeta, kappa).expect("validated").sample(rng),
            Params::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
            Params::Gamma { shape, scale } => GammaSampler::new(shape, scale).expect("validated").sample(rng),
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.params {
            Params::Poisson { lambda } => write!(f, "Poisson(λ={lambda:.4})"),
            Params::DiscretizedNormal { mu, sigma } => write!(f, "dNormal(μ={mu:.4}, σ={sigma:.4})"),
            Params::DiscretizedGamma { shape, scale } => write!(f, "dGamma(k={shape:.4}, θ={scale:.4})"),
            Params::BirnbaumSaunders { eta, gamma } => write!(f, "BS(η={eta:.4}, γ={gamma:.4})"),
            Params::LogNormal { psi, rho } => write!(f, "LogNormal(ψ={psi:.4}, ρ={rho:.4})"),
            Params::Weibull { zeta, kappa } => write!(f, "Weibull(ζ={zeta:.4}, κ={kappa:.4})"),
            Params::Exponential { mean } => write!(f, "Exp(mean={mean:.4})"),
            Params::Gamma { shape, scale } => write!(f, "Gamma(k={shape:.4}, θ={scale:.4})"),
        }
    }
}

fn gamma_quantile(shape: f64, scale: f64, p: f64) -> f64 {
    // Bracket, then bisect on the regularised lower incomplete gamma.
    let mut lo = 0.0;
    let mut hi = (shape + 10.0 * shape.sqrt() + 10.0).max(1.0);
    while gamma_lr(shape, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(shape, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi) * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_specs() -> Vec<DistSpec> {
        vec![
            DistSpec::poisson(12.2).unwrap(),
            DistSpec::poisson(0.7).unwrap(),
            DistSpec::discretized_normal(9.0, 2.0).unwrap(),
            DistSpec::discretized_normal(0.4, 1.3).unwrap(),
            DistSpec::discretized_gamma(4.0, 2.0).unwrap(),
            DistSpec::birnbaum_saunders(13.62, 1.867).unwrap(),
            DistSpec::log_normal(2.709, 1.435).unwrap(),
            DistSpec::weibull(1.317, 1.306).unwrap(),
            DistSpec::weibull(0.152, 0.910).unwrap(),
            DistSpec::exponential(3.5).unwrap(),
            DistSpec::gamma(2.5, 0.4).unwrap(),
            DistSpec::gamma(0.8, 1.5).unwrap(),
        ]
    }

    #[test]
    fn documented_point_values() {
        assert_relative_eq!(DistSpec::poisson(2.0).unwrap().density(0.0), (-2.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(DistSpec::weibull(1.0, 1.0).unwrap().density(1.0), (-1.0f64).exp(), max_relative = 1e-12);
        let bs = DistSpec::birnbaum_saunders(13.62, 1.867).unwrap();
        assert!((bs.cdf(13.62) - 0.5).abs() < 1e-12);
        let ln = DistSpec::log_normal(2.709, 1.435).unwrap();
        assert!((ln.cdf(2.709f64.exp()) - 0.5).abs() < 1e-9);
        assert_eq!(DistSpec::exponential(4.0).unwrap().cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn poisson_cdf_matches_pmf_partial_sum() {
        let spec = DistSpec::poisson(12.2).unwrap();
        // Independent brute force: iterate the pmf recurrence p_k = p_{k-1}·λ/k.
        let mut term = (-12.2f64).exp();
        let mut sum = term;
        for k in 1..=12 {
            term *= 12.2 / k as f64;
            sum += term;
        }
        assert_relative_eq!(spec.cdf(12.0), sum, max_relative = 1e-12);
        assert_relative_eq!(spec.cdf(12.7), sum, max_relative = 1e-12);
    }

    #[test]
    fn outside_support_is_zero() {
        for spec in all_specs() {
            assert_eq!(spec.density(-1.0), 0.0, "{spec}");
            assert_eq!(spec.cdf(-1.0), 0.0, "{spec}");
            if spec.is_discrete() {
                assert_eq!(spec.density(2.5), 0.0, "{spec}");
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(DistSpec::weibull(1.0, 0.0).is_err());
        assert!(DistSpec::log_normal(f64::NAN, 1.0).is_err());
        assert!(DistSpec::birnbaum_saunders(-1.0, 1.0).is_err());
        assert!(DistSpec::poisson(0.0).is_err());
        let err: std::result::Result<DistSpec, _> =
            serde_json::from_str(r#"{"family":"Weibull","zeta":1.0,"kappa":-2.0}"#);
        assert!(err.is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        for spec in all_specs() {
            if spec.is_discrete() {
                let mean = spec.mean();
                let upper = (mean + 20.0 * mean.sqrt().max(2.0)).ceil() as u64 + 20;
                let total: f64 = (0..=upper).map(|k| spec.density(k as f64)).sum();
                assert!((1.0 - 1e-8..=1.0 + 1e-9).contains(&total), "{spec}: {total}");
            } else {
                // Quadrature in u = F(x) space is circular; integrate the
                // density directly with a log-spaced composite Simpson rule.
                let lo = spec.quantile(1e-12).max(1e-12);
                let hi = spec.quantile(1.0 - 1e-12);
                let total = simpson_log(|x| spec.density(x), lo, hi, 200_000);
                let missing = spec.cdf(lo) + spec.sf(hi);
                assert!((total + missing - 1.0).abs() < 1e-6, "{spec}: {total}");
            }
        }
    }

    /// Composite Simpson on `ln x`, integrand `f(x)·x`.
    fn simpson_log(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let (a, b) = (lo.ln(), hi.ln());
        let h = (b - a) / n as f64;
        let g = |u: f64| {
            let x = u.exp();
            f(x) * x
        };
        let mut s = g(a) + g(b);
        for i in 1..n {
            let u = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(u);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_is_running_integral_of_density() {
        for spec in all_specs() {
            if spec.is_discrete() {
                let mut acc = 0.0;
                let top = spec.quantile(1.0 - 1e-9) as u64;
                for k in 0..=top {
                    acc += spec.density(k as f64);
                    let c = spec.cdf(k as f64);
                    assert!((acc - c).abs() <= 1e-5 * c.max(1e-300) + 1e-14, "{spec} k={k}: {acc} vs {c}");
                }
            } else {
                let lo = spec.quantile(1e-9);
                for i in 1..=100 {
                    let p = i as f64 / 101.0;
                    let x = spec.quantile(p);
                    let integral = spec.cdf(lo) + simpson_log(|t| spec.density(t), lo, x, 20_000);
                    assert!((integral - spec.cdf(x)).abs() <= 1e-5 * spec.cdf(x), "{spec} at {x}");
                }
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for spec in all_specs() {
            for p in [0.01, 0.2, 0.5, 0.77, 0.99] {
                let x = spec.quantile(p);
                if spec.is_discrete() {
                    assert!(spec.cdf(x) >= p && (x == 0.0 || spec.cdf(x - 1.0) < p), "{spec}");
                } else {
                    assert_relative_eq!(spec.cdf(x), p, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn weibull_shape_one_is_exponential() {
        for zeta in [0.152, 1.0, 3.999, 52.07] {
            let w = DistSpec::weibull(zeta, 1.0).unwrap();
            let e = DistSpec::exponential(zeta).unwrap();
            for i in 0..200 {
                let x = i as f64 * zeta / 20.0;
                assert!((w.density(x) - e.density(x)).abs() <= 1e-12);
                assert!((w.cdf(x) - e.cdf(x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn serde_roundtrip() {
        for spec in all_specs() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: DistSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }
}
