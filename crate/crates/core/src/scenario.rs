//! Scenario identities and the built-in per-scenario parameter catalog.
//!
//! Every built-in model carries the per-scenario values for the number of
//! MPCs, their birth rate, lifetime, excess delay and relative Doppler.
//! Models can also be written to and read from a JSON model file, see
//! `docs/model-format.md`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound applied to every evaluated λ(d) unless a model overrides it.
pub const DEFAULT_LAMBDA_CAP: f64 = 60.0;

/// Distance range over which the built-in polynomials are evaluated.
pub const DEFAULT_VALID_RANGE: (f64, f64) = (10.0, 500.0);

/// Distance where the UOT birth rate switches between its two polynomials.
pub const UOT_BIRTH_CROSSOVER_M: f64 = 300.0;

/// Constant birth rate that fits the sparse TCT data about as well as the
/// tabulated line.
pub const TCT_CONSTANT_BIRTH_RATE: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    /// Highway to infrastructure.
    H2I,
    /// Highway convoy traffic.
    HCT,
    /// Highway oncoming traffic.
    HOT,
    /// Rural convoy traffic.
    RCT,
    /// Rural oncoming traffic.
    ROT,
    /// Tunnel convoy traffic.
    TCT,
    /// Urban convoy traffic.
    UCT,
    /// Urban oncoming traffic.
    UOT,
}

/// Grouping by the shape of the relative Doppler distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerGroup {
    Oncoming,
    Convoy,
    Urban,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 8] = [
        ScenarioId::H2I,
        ScenarioId::HCT,
        ScenarioId::HOT,
        ScenarioId::RCT,
        ScenarioId::ROT,
        ScenarioId::TCT,
        ScenarioId::UCT,
        ScenarioId::UOT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::H2I => "H2I",
            ScenarioId::HCT => "HCT",
            ScenarioId::HOT => "HOT",
            ScenarioId::RCT => "RCT",
            ScenarioId::ROT => "ROT",
            ScenarioId::TCT => "TCT",
            ScenarioId::UCT => "UCT",
            ScenarioId::UOT => "UOT",
        }
    }

    pub fn doppler_group(self) -> DopplerGroup {
        match self {
            ScenarioId::H2I | ScenarioId::HOT | ScenarioId::ROT => DopplerGroup::Oncoming,
            ScenarioId::HCT | ScenarioId::RCT | ScenarioId::TCT => DopplerGroup::Convoy,
            ScenarioId::UCT | ScenarioId::UOT => DopplerGroup::Urban,
        }
    }

    /// Whether the two terminals drive towards each other.
    pub fn is_oncoming(self) -> bool {
        matches!(self, ScenarioId::H2I | ScenarioId::HOT | ScenarioId::ROT | ScenarioId::UOT)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL.iter().copied().find(|id| id.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| Error::Parse {
            what: "scenario id".into(),
            message: format!("unknown scenario `{s}` (expected one of H2I, HCT, HOT, RCT, ROT, TCT, UCT, UOT)"),
        })
    }
}

/// Quadratic distance law `λ(d) = p0 + p1·d + p2·d²` (d in metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoly {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// `[d_min, d_max]` in metres; evaluation clamps `d` into this range.
    pub valid_range: (f64, f64),
}

impl LambdaPoly {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Self {
        LambdaPoly { p0, p1, p2, valid_range: DEFAULT_VALID_RANGE }
    }

    pub fn constant(p0: f64) -> Self {
        LambdaPoly::new(p0, 0.0, 0.0)
    }

    pub fn with_range(mut self, d_min: f64, d_max: f64) -> Self {
        self.valid_range = (d_min, d_max);
        self
    }

    /// Raw polynomial value, no clamping of either `d` or the result.
    pub fn raw(&self, d: f64) -> f64 {
        self.p0 + self.p1 * d + self.p2 * d * d
    }

    /// λ(d) with `d` clamped into the valid range and the result clamped to
    /// `[0, DEFAULT_LAMBDA_CAP]`.
    pub fn eval(&self, d: f64) -> f64 {
        self.eval_capped(d, DEFAULT_LAMBDA_CAP)
    }

    pub fn eval_capped(&self, d: f64, cap: f64) -> f64 {
        let (lo, hi) = self.valid_range;
        let d = d.clamp(lo, hi);
        self.raw(d).clamp(0.0, cap)
    }

    fn validate(&self, field: &str) -> Result<()> {
        let (lo, hi) = self.valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::validation(
                format!("{field}.valid_range"),
                format!("must be a non-empty finite interval, got [{lo}, {hi}]"),
            ));
        }
        for (name, v) in [("p0", self.p0), ("p1", self.p1), ("p2", self.p2)] {
            if !v.is_finite() {
                return Err(Error::validation(format!("{field}.{name}"), "must be finite"));
            }
        }
        Ok(())
    }
}

/// Distance law of the number of alive MPCs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumberModel {
    pub poly: LambdaPoly,
    pub stdev: f64,
}

/// One distance interval of a birth-rate law. `to_m = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthSegment {
    pub from_m: f64,
    pub to_m: Option<f64>,
    pub poly: LambdaPoly,
    pub stdev: f64,
}

impl BirthSegment {
    fn contains(&self, d: f64) -> bool {
        d >= self.from_m && self.to_m.is_none_or(|to| d < to)
    }
}

/// Piecewise birth-rate law (newborn MPCs per metre of relative travel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthRateModel {
    pub segments: Vec<BirthSegment>,
}

impl BirthRateModel {
    pub fn single(poly: LambdaPoly, stdev: f64) -> Self {
        BirthRateModel { segments: vec![BirthSegment { from_m: 0.0, to_m: None, poly, stdev }] }
    }

    /// Segment governing distance `d`; distances below the first segment
    /// fall into the first one, distances past a bounded last segment into
    /// the last one.
    pub fn segment_at(&self, d: f64) -> &BirthSegment {
        self.segments.iter().find(|s| s.contains(d)).unwrap_or_else(|| {
            if d < self.segments[0].from_m {
                &self.segments[0]
            } else {
                self.segments.last().expect("validated non-empty")
            }
        })
    }

    pub fn eval_capped(&self, d: f64, cap: f64) -> f64 {
        self.segment_at(d).poly.eval_capped(d, cap)
    }

    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::validation("birth.segments", "at least one segment required"));
        }
        for (k, seg) in self.segments.iter().enumerate() {
            let field = format!("birth.segments[{k}]");
            seg.poly.validate(&format!("{field}.poly"))?;
            if !(seg.stdev.is_finite() && seg.stdev >= 0.0) {
                return Err(Error::validation(format!("{field}.stdev"), "must be >= 0"));
            }
            if let Some(to) = seg.to_m {
                if to <= seg.from_m {
                    return Err(Error::validation(format!("{field}.to_m"), "must exceed from_m"));
                }
            } else if k + 1 != self.segments.len() {
                return Err(Error::validation(format!("{field}.to_m"), "only the last segment may be unbounded"));
            }
            if k > 0 {
                let prev_to = self.segments[k - 1].to_m;
                if prev_to != Some(seg.from_m) {
                    return Err(Error::validation(
                        format!("{field}.from_m"),
                        "segments must be contiguous and non-overlapping",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Birnbaum-Saunders lifetime parameters (metres of relative travel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeParams {
    pub eta: f64,
    pub gamma: f64,
}

/// Log-normal excess-delay parameters (log-nanoseconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessDelayParams {
    pub psi: f64,
    pub rho: f64,
}

/// Weibull relative-Doppler parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelDopplerParams {
    pub zeta: f64,
    pub kappa: f64,
}

fn default_cap() -> f64 {
    DEFAULT_LAMBDA_CAP
}

/// Complete statistical description of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub id: ScenarioId,
    pub number: NumberModel,
    pub birth: BirthRateModel,
    pub lifetime: LifetimeParams,
    pub excess_delay: ExcessDelayParams,
    pub rel_doppler: RelDopplerParams,
    #[serde(default = "default_cap")]
    pub lambda_cap: f64,
}

impl ScenarioModel {
    pub fn validate(&self) -> Result<()> {
        self.number.poly.validate("number.poly")?;
        if !(self.number.stdev.is_finite() && self.number.stdev >= 0.0) {
            return Err(Error::validation("number.stdev", "must be >= 0"));
        }
        self.birth.validate()?;
        let positive = [
            ("lifetime.eta", self.lifetime.eta),
            ("lifetime.gamma", self.lifetime.gamma),
            ("excess_delay.rho", self.excess_delay.rho),
            ("rel_doppler.zeta", self.rel_doppler.zeta),
            ("rel_doppler.kappa", self.rel_doppler.kappa),
            ("lambda_cap", self.lambda_cap),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if !self.excess_delay.psi.is_finite() {
            return Err(Error::validation("excess_delay.psi", "must be finite"));
        }
        Ok(())
    }

    /// Mean number of alive MPCs at distance `d` (capped).
    pub fn number_lambda(&self, d: f64) -> f64 {
        self.number.poly.eval_capped(d, self.lambda_cap)
    }

    /// Newborn MPCs per metre at distance `d` (capped).
    pub fn birth_lambda(&self, d: f64) -> f64 {
        self.birth.eval_capped(d, self.lambda_cap)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ScenarioModel = serde_json::from_str(text)
            .map_err(|e| Error::Parse { what: "scenario model".into(), message: e.to_string() })?;
        model.validate()?;
        Ok(model)
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ScenarioModel> {
    let text = fs::read_to_string(path)?;
    ScenarioModel::from_json(&text)
}

pub fn save_model(model: &ScenarioModel, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    fs::write(path, model.to_json() + "\n")?;
    Ok(())
}

fn number(stdev: f64, p0: f64, p1: f64, p2: f64) -> NumberModel {
    NumberModel { poly: LambdaPoly::new(p0, p1, p2), stdev }
}

fn birth(stdev: f64, p0: f64, p1: f64, p2: f64) -> BirthRateModel {
    BirthRateModel::single(LambdaPoly::new(p0, p1, p2), stdev)
}

/// The built-in per-scenario model.
///
/// H2I's tabulated `p2 = 3.99` is stored as printed; with it λ(d) saturates
/// at the cap for all but the shortest distances.
pub fn builtin_model(id: ScenarioId) -> ScenarioModel {
    use ScenarioId::*;
    // (eta, gamma, psi, rho, zeta, kappa)
    let (eta, gamma, psi, rho, zeta, kappa) = match id {
        H2I => (13.62, 1.867, 3.110, 2.096, 1.041, 2.679),
        HCT => (52.07, 1.355, 2.071, 1.718, 0.152, 0.910),
        HOT => (22.01, 2.319, 2.160, 1.534, 0.993, 3.517),
        RCT => (19.52, 2.031, 2.041, 1.600, 0.289, 0.862),
        ROT => (10.87, 2.169, 1.955, 1.399, 1.061, 2.650),
        TCT => (4.554, 2.011, 3.021, 1.435, 0.414, 1.013),
        UCT => (2.248, 2.789, 3.288, 1.385, 1.134, 1.051),
        UOT => (3.999, 2.539, 2.709, 1.435, 1.317, 1.306),
    };
    let number = match id {
        H2I => number(2.08, 18.9, -5.37e-2, 3.99),
        HCT => number(1.63, 10.2, -1.62e-2, 0.0),
        HOT => number(0.92, 7.97, -2.14e-2, 1.54e-5),
        RCT => number(1.38, 9.73, -1.70e-2, 0.0),
        ROT => number(1.62, 7.11, -0.95e-2, 0.0),
        TCT => number(0.87, 12.2, 0.0, 0.0),
        UCT => number(1.69, 14.5, -2.61e-2, 0.0),
        UOT => number(1.82, 16.9, -3.05e-2, 0.0),
    };
    let birth = match id {
        H2I => birth(1.59, 15.8, -5.45e-2, 5.21),
        HCT => birth(1.18, 7.26, -1.25e-2, 0.0),
        HOT => birth(0.58, 5.26, -1.77e-2, 1.58e-5),
        RCT => birth(1.06, 6.90, -1.25e-2, 0.0),
        ROT => birth(1.22, 3.49, -0.34e-2, 0.0),
        TCT => birth(0.61, 9.82, -0.61e-2, 0.0),
        UCT => birth(2.40, 13.8, -2.86e-2, 0.0),
        UOT => uot_birth(),
    };
    ScenarioModel {
        id,
        number,
        birth,
        lifetime: LifetimeParams { eta, gamma },
        excess_delay: ExcessDelayParams { psi, rho },
        rel_doppler: RelDopplerParams { zeta, kappa },
        lambda_cap: DEFAULT_LAMBDA_CAP,
    }
}

fn uot_birth() -> BirthRateModel {
    let (lo, hi) = DEFAULT_VALID_RANGE;
    // Rising branch below the crossover, falling branch above it.
    let below = LambdaPoly::new(9.01e-1, 6.13e-2, 0.0).with_range(lo, UOT_BIRTH_CROSSOVER_M);
    let above = LambdaPoly::new(41.1, -6.93e-2, 0.0).with_range(UOT_BIRTH_CROSSOVER_M, hi);
    BirthRateModel {
        segments: vec![
            BirthSegment { from_m: 0.0, to_m: Some(UOT_BIRTH_CROSSOVER_M), poly: below, stdev: 8.24 },
            BirthSegment { from_m: UOT_BIRTH_CROSSOVER_M, to_m: None, poly: above, stdev: 4.90 },
        ],
    }
}

/// Alternative TCT birth law: a distance-independent rate of 7.5 per metre.
pub fn tct_constant_birth() -> BirthRateModel {
    BirthRateModel::single(LambdaPoly::constant(TCT_CONSTANT_BIRTH_RATE), 0.61)
}
