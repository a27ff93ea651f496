//! Recovered parameters against a reference model.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::report::{AnalysisReport, CountFit, StatisticFit};
use crate::error::{Error, Result};
use crate::scenario::{LambdaPoly, ScenarioModel};
use crate::stats::DistSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub statistic: String,
    pub parameter: String,
    pub reference: f64,
    pub estimate: Option<f64>,
    /// `|estimate - reference| / |reference|`; absent for a zero reference
    /// or a missing estimate.
    pub rel_err: Option<f64>,
    /// Whether the simulator reproduces this parameter by construction, so
    /// that a deviation is an error of the pipeline.
    pub checked: bool,
}

impl Deviation {
    fn new(statistic: &str, parameter: &str, reference: f64, estimate: Option<f64>, checked: bool) -> Self {
        let rel_err = estimate.filter(|_| reference != 0.0).map(|e| ((e - reference) / reference).abs());
        Deviation { statistic: statistic.into(), parameter: parameter.into(), reference, estimate, rel_err, checked }
    }
}

/// `calibrated`: the data came from a simulator whose birth rate was
/// rescaled to reproduce the number law. The number rows are then checked
/// and the birth rows are not; otherwise the reverse.
pub fn compare_models(report: &AnalysisReport, reference: &ScenarioModel, calibrated: bool) -> Vec<Deviation> {
    let mut rows = Vec::new();
    let poly_rows = |rows: &mut Vec<Deviation>,
                     name: &str,
                     fit: Option<&CountFit>,
                     ref_mean: Option<f64>,
                     r: &LambdaPoly,
                     checked: bool| {
        let est = fit.map(|f| f.poly);
        rows.push(Deviation::new(name, "p0", r.p0, est.map(|p| p.p0), false));
        rows.push(Deviation::new(name, "p1", r.p1, est.map(|p| p.p1), false));
        rows.push(Deviation::new(name, "p2", r.p2, est.map(|p| p.p2), false));
        if let Some(m) = ref_mean {
            rows.push(Deviation::new(name, "mean", m, fit.map(|f| f.mean_lambda), checked));
        }
    };
    let weighted = |fit: Option<&CountFit>, law: &dyn Fn(f64) -> f64| {
        fit.map(|f| f.bins.iter().map(|b| b.n as f64 * law(b.center)).sum::<f64>() / f.n as f64)
    };
    let number = report.number.as_ref();
    let number_mean = weighted(number, &|d| reference.number_lambda(d));
    poly_rows(&mut rows, "number", number, number_mean, &reference.number.poly, calibrated);
    let birth = report.birth.as_ref();
    let birth_mean = weighted(birth, &|d| reference.birth_lambda(d));
    let seg = reference.birth.segments[0].poly;
    poly_rows(&mut rows, "birth", birth, birth_mean, &seg, !calibrated);

    let dist_rows =
        |rows: &mut Vec<Deviation>, name: &str, fit: Option<&StatisticFit>, names: [&str; 2], refs: [f64; 2]| {
            let est: Option<Vec<f64>> = fit.map(|f| f.primary.spec.param_vec());
            for k in 0..2 {
                rows.push(Deviation::new(name, names[k], refs[k], est.as_ref().map(|v| v[k]), true));
            }
        };
    dist_rows(
        &mut rows,
        "lifetime",
        report.lifetime.as_ref(),
        ["eta", "gamma"],
        [reference.lifetime.eta, reference.lifetime.gamma],
    );
    dist_rows(
        &mut rows,
        "excess_delay",
        report.excess_delay.as_ref(),
        ["psi", "rho"],
        [reference.excess_delay.psi, reference.excess_delay.rho],
    );
    dist_rows(
        &mut rows,
        "rel_doppler",
        report.rel_doppler.as_ref(),
        ["zeta", "kappa"],
        [reference.rel_doppler.zeta, reference.rel_doppler.kappa],
    );
    rows
}

/// Largest relative error among the checked rows; `None` if a checked row
/// has no estimate.
pub fn worst_checked(rows: &[Deviation]) -> Option<f64> {
    rows.iter().filter(|r| r.checked).try_fold(0.0f64, |m, r| r.rel_err.map(|e| m.max(e)))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_deviations_csv<W: Write>(rows: &[Deviation], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["statistic", "parameter", "reference", "estimate", "rel_err", "checked"]).map_err(csv_err)?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        out.write_record([
            r.statistic.clone(),
            r.parameter.clone(),
            format!("{}", r.reference),
            opt(r.estimate),
            opt(r.rel_err),
            r.checked.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Empirical CDF against the fitted laws for one statistic.
fn cdf_rows<W: Write>(out: &mut csv::Writer<W>, name: &str, values: &[f64], fit: &StatisticFit) -> Result<()> {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let cdf = |s: &DistSpec, x: f64| format!("{}", s.cdf(x));
    for (i, &x) in xs.iter().enumerate() {
        out.write_record([
            name.to_string(),
            format!("{x}"),
            format!("{}", (i + 1) as f64 / n),
            cdf(&fit.primary.spec, x),
            fit.alternative.map(|a| cdf(&a.spec, x)).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    Ok(())
}

/// Plot data: empirical versus fitted CDF of lifetimes, excess delays and
/// relative Dopplers.
pub fn write_cdf_csv<W: Write>(report: &AnalysisReport, samples: &super::SampleTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["statistic", "x", "empirical", "primary", "alternative"]).map_err(csv_err)?;
    if let Some(f) = &report.lifetime {
        cdf_rows(&mut out, "lifetime_m", &samples.lifetime_values(), f)?;
    }
    if let Some(f) = &report.excess_delay {
        cdf_rows(&mut out, "excess_delay_ns", &samples.delay_values(report.config.delay_floor_ns), f)?;
    }
    if let Some(f) = &report.rel_doppler {
        cdf_rows(&mut out, "rel_doppler", &samples.doppler_values(), f)?;
    }
    out.flush()?;
    Ok(())
}

/// Plot data: bin means of the count statistics against the fitted laws.
pub fn write_lambda_csv<W: Write>(report: &AnalysisReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["statistic", "d_center", "n", "mean", "variance", "fitted"]).map_err(csv_err)?;
    for (name, fit) in [("number", &report.number), ("birth", &report.birth)] {
        let Some(f) = fit else { continue };
        for b in &f.bins {
            out.write_record([
                name.to_string(),
                format!("{}", b.center),
                b.n.to_string(),
                format!("{}", b.mean),
                format!("{}", b.variance),
                format!("{}", f.poly.raw(b.center)),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}
