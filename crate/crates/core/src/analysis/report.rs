//! Model fits over the pooled statistics of one or more runs.

use serde::{Deserialize, Serialize};

use super::bins::{bin_by_distance, DistanceBin, DEFAULT_BIN_WIDTH_M};
use super::samples::{sample_table, Guard, SampleTable};
use super::sets::{birth_rate, set_stats, BirthWindow, SetStats};
use crate::error::{Error, Result};
use crate::extract::TrackDb;
use crate::scenario::{LambdaPoly, ScenarioModel};
use crate::stats::gof::DEFAULT_SIGNIFICANCE;
use crate::stats::{
    cdf_mse, chi2_gof, fit, fit_censored, fit_lambda, ks_test, CensoredSample, DistSpec, Family, GofResult,
};

/// Births this close to the LOS are often masked by it or by the dense
/// early paths around it, so the delay fit is truncated here, ns.
pub const DEFAULT_DELAY_FLOOR_NS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub bin_width_m: f64,
    /// Polynomial degree of the fitted number and birth laws (0, 1 or 2);
    /// lowered automatically when too few distance bins are populated.
    pub number_degree: usize,
    pub birth_degree: usize,
    /// Excess delays at or below this value are left out and the fit is
    /// truncated there; 0 disables the truncation.
    pub delay_floor_ns: f64,
    pub significance: f64,
    /// The receiver is roadside infrastructure, exempt from the speed rule.
    pub rx_infrastructure: bool,
    /// Recognition of tracks broken at crossings.
    pub guard: Guard,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bin_width_m: DEFAULT_BIN_WIDTH_M,
            number_degree: 1,
            birth_degree: 1,
            delay_floor_ns: DEFAULT_DELAY_FLOOR_NS,
            significance: DEFAULT_SIGNIFICANCE,
            rx_infrastructure: false,
            guard: Guard::default(),
        }
    }
}

fn degree_of(p: &LambdaPoly) -> usize {
    if p.p2 != 0.0 {
        2
    } else if p.p1 != 0.0 {
        1
    } else {
        0
    }
}

impl AnalysisConfig {
    /// Degrees taken from a reference model, so that fitted coefficients
    /// are comparable with it.
    pub fn for_model(model: &ScenarioModel) -> Self {
        let birth = model.birth.segments.iter().map(|s| degree_of(&s.poly)).max().unwrap_or(1);
        AnalysisConfig {
            number_degree: degree_of(&model.number.poly),
            birth_degree: birth,
            rx_infrastructure: model.id == crate::scenario::ScenarioId::H2I,
            ..AnalysisConfig::default()
        }
    }
}

/// Everything the report is fitted from; runs pool by concatenation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunData {
    pub runs: usize,
    pub sets: Vec<SetStats>,
    pub births: Vec<BirthWindow>,
    pub samples: SampleTable,
}

impl RunData {
    pub fn from_db(db: &TrackDb, cfg: &AnalysisConfig) -> Self {
        let sets = set_stats(db, cfg.rx_infrastructure);
        let births = birth_rate(&sets, db.meta.set_period);
        let samples = sample_table(db, &sets, cfg.guard);
        RunData { runs: 1, sets, births, samples }
    }

    pub fn merge(&mut self, other: RunData) {
        self.runs += other.runs;
        self.sets.extend(other.sets);
        self.births.extend(other.births);
        self.samples.merge(other.samples);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub spec: DistSpec,
    pub chi2: Option<GofResult>,
    pub ks: Option<GofResult>,
    pub cdf_mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticFit {
    /// Observations the fit used.
    pub n: usize,
    pub primary: FamilyFit,
    pub alternative: Option<FamilyFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountBin {
    pub center: f64,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// χ² against a Poisson law fitted to the bin.
    pub poisson: Option<GofResult>,
    /// χ² against a discretized normal law fitted to the bin.
    pub normal: Option<GofResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountFit {
    pub poly: LambdaPoly,
    pub degree: usize,
    /// Spread of the counts around the fitted curve.
    pub stdev: f64,
    /// Mean squared residual of the curve against the bin means.
    pub mse: f64,
    /// Count-weighted mean of the fitted curve over the observed bins.
    pub mean_lambda: f64,
    pub n: usize,
    pub bins: Vec<CountBin>,
    /// Share of testable bins in which the Poisson law is rejected.
    pub poisson_rejection: Option<f64>,
    pub normal_rejection: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub runs: usize,
    pub sets: usize,
    pub birth_windows: usize,
    /// Mean relative travel covered by one birth window, m.
    pub mean_window_travel_m: f64,
    pub newborn: usize,
    pub single_set_tracks: usize,
    pub censored_lifetimes: usize,
    pub geometric_los: usize,
    pub negative_delays: usize,
    pub guarded_starts: usize,
    pub delays_below_floor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub number: Option<CountFit>,
    pub birth: Option<CountFit>,
    pub lifetime: Option<StatisticFit>,
    pub excess_delay: Option<StatisticFit>,
    pub rel_doppler: Option<StatisticFit>,
    pub positive_doppler_share: Option<f64>,
    pub counts: SampleCounts,
    /// Fits that could not be made, with the reason.
    pub warnings: Vec<String>,
}

fn gof(values: &[f64], spec: &DistSpec, significance: f64) -> FamilyFit {
    let k = spec.family().n_params();
    FamilyFit {
        spec: *spec,
        chi2: chi2_gof(values, spec, k, significance).ok(),
        ks: if spec.is_discrete() { None } else { ks_test(values, spec, significance).ok() },
        cdf_mse: cdf_mse(values, spec).ok(),
    }
}

fn rejection_share(results: impl Iterator<Item = Option<GofResult>>) -> Option<f64> {
    let tested: Vec<bool> = results.flatten().map(|g| g.reject).collect();
    (!tested.is_empty()).then(|| tested.iter().filter(|&&r| r).count() as f64 / tested.len() as f64)
}

/// Fit a distance law to `(d, count)` samples.
pub fn fit_counts(samples: &[(f64, f64)], degree: usize, cfg: &AnalysisConfig) -> Result<CountFit> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no counts to fit".into()));
    }
    let bins: Vec<DistanceBin> = bin_by_distance(samples.iter().copied(), cfg.bin_width_m);
    let lambda_bins: Vec<_> = bins.iter().map(DistanceBin::lambda_bin).collect();
    let mut used = degree.min(2);
    let (poly, mse) = loop {
        match fit_lambda(&lambda_bins, used) {
            Ok(r) => break r,
            Err(Error::InsufficientData(_)) if used > 0 => used -= 1,
            Err(Error::InsufficientData(_)) => {
                // A single bin: the law is its mean.
                let m = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
                let c = bins[0].center;
                break (LambdaPoly::constant(m).with_range(c - cfg.bin_width_m / 2.0, c + cfg.bin_width_m / 2.0), 0.0);
            }
            Err(e) => return Err(e),
        }
    };
    let n = samples.len();
    let stdev = (samples.iter().map(|(d, x)| (x - poly.raw(*d)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mean_lambda = bins.iter().map(|b| b.n() as f64 * poly.raw(b.center)).sum::<f64>() / n as f64;
    let count_bins: Vec<CountBin> = bins
        .iter()
        .map(|b| {
            let test = |family| {
                fit(family, &b.values)
                    .ok()
                    .and_then(|s| chi2_gof(&b.values, &s, family.n_params(), cfg.significance).ok())
            };
            CountBin {
                center: b.center,
                n: b.n(),
                mean: b.mean(),
                variance: b.variance(),
                poisson: test(Family::Poisson),
                normal: test(Family::DiscretizedNormal),
            }
        })
        .collect();
    Ok(CountFit {
        poly,
        degree: used,
        stdev,
        mse,
        mean_lambda,
        n,
        poisson_rejection: rejection_share(count_bins.iter().map(|b| b.poisson)),
        normal_rejection: rejection_share(count_bins.iter().map(|b| b.normal)),
        bins: count_bins,
    })
}

fn keep<T>(warnings: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| warnings.push(format!("{what}: {e}"))).ok()
}

fn fit_statistic(
    values: &[f64],
    censored: Option<&[CensoredSample]>,
    primary: Family,
    alternative: Family,
    cfg: &AnalysisConfig,
) -> Result<StatisticFit> {
    let one = |family| match censored {
        Some(c) => fit_censored(family, c),
        None => fit(family, values),
    };
    let p = one(primary)?;
    let alt = one(alternative).ok();
    Ok(StatisticFit {
        n: censored.map_or(values.len(), <[_]>::len),
        primary: gof(values, &p, cfg.significance),
        alternative: alt.map(|a| gof(values, &a, cfg.significance)),
    })
}

/// Fit every statistic. Individual fits that lack data are reported as
/// warnings; an input with neither sets nor samples is an error.
pub fn build_report(data: &RunData, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let s = &data.samples;
    if data.sets.is_empty() && s.lifetimes.is_empty() {
        return Err(Error::InsufficientData("empty sample table".into()));
    }
    let mut warnings = Vec::new();

    let number_samples: Vec<(f64, f64)> = data.sets.iter().map(|s| (s.d, s.p as f64)).collect();
    let number = keep(&mut warnings, "number", fit_counts(&number_samples, cfg.number_degree, cfg));
    let birth_samples: Vec<(f64, f64)> = data.births.iter().map(|w| (w.d, w.r as f64)).collect();
    let birth = keep(&mut warnings, "birth", fit_counts(&birth_samples, cfg.birth_degree, cfg));

    let life_values = s.lifetime_values();
    let life_censored = s.fit_lifetimes();
    let lifetime = keep(
        &mut warnings,
        "lifetime",
        fit_statistic(&life_values, Some(&life_censored), Family::BirnbaumSaunders, Family::LogNormal, cfg),
    );

    let delays = s.delay_values(cfg.delay_floor_ns);
    let truncated: Vec<CensoredSample>;
    let delay_censored = if cfg.delay_floor_ns > 0.0 {
        truncated = delays
            .iter()
            .map(|&x| CensoredSample { truncation: cfg.delay_floor_ns, ..CensoredSample::exact(x) })
            .collect();
        Some(&truncated[..])
    } else {
        None
    };
    let excess_delay = keep(
        &mut warnings,
        "excess delay",
        fit_statistic(&delays, delay_censored, Family::LogNormal, Family::Exponential, cfg),
    );

    let dopplers = s.doppler_values();
    let rel_doppler =
        keep(&mut warnings, "relative Doppler", fit_statistic(&dopplers, None, Family::Weibull, Family::Gamma, cfg));

    let counts = SampleCounts {
        runs: data.runs,
        sets: data.sets.len(),
        birth_windows: data.births.len(),
        mean_window_travel_m: if data.births.is_empty() {
            0.0
        } else {
            data.births.iter().map(|w| w.travel).sum::<f64>() / data.births.len() as f64
        },
        newborn: s.lifetimes.len(),
        single_set_tracks: s.single_set_tracks(),
        censored_lifetimes: s.lifetimes.iter().filter(|l| l.censored && l.sets > 0).count(),
        geometric_los: s.geometric_los,
        negative_delays: s.negative_delays,
        guarded_starts: s.guarded_starts,
        delays_below_floor: s.excess_delays.len() - delays.len(),
    };
    Ok(AnalysisReport {
        config: *cfg,
        number,
        birth,
        lifetime,
        excess_delay,
        rel_doppler,
        positive_doppler_share: s.positive_doppler_share(),
        counts,
        warnings,
    })
}
