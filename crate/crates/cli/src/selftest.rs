use std::process::ExitCode;

use vmpc_core::extract::detect::{detect, DetectConfig};
use vmpc_core::extract::{extract_stream, ExtractConfig, TrackDb};
use vmpc_core::scenario::{builtin_model, ScenarioId};
use vmpc_core::sim::cirfile::{CirReader, CirWriter};
use vmpc_core::sim::presets::builtin_config;
use vmpc_core::sim::{run_simulation, synth_snapshot, Grid, PathSample, Pulse, Simulator};
use vmpc_core::stats::{fit, sample, DistSpec, Family, StreamRng};

use crate::args::SelfTestArgs;

type Check = std::result::Result<(), String>;
type Named<'a> = (&'a str, Box<dyn Fn() -> Check + 'a>);

fn within(name: &str, est: f64, reference: f64, tol: f64) -> Check {
    let err = ((est - reference) / reference).abs();
    if err <= tol {
        Ok(())
    } else {
        Err(format!("{name} {est:.5} vs {reference:.5} ({:.2}%)", 100.0 * err))
    }
}

fn refit(seed: u64) -> Check {
    for (k, id) in ScenarioId::ALL.into_iter().enumerate() {
        let m = builtin_model(id);
        let laws = [
            (Family::BirnbaumSaunders, DistSpec::birnbaum_saunders(m.lifetime.eta, m.lifetime.gamma)),
            (Family::LogNormal, DistSpec::log_normal(m.excess_delay.psi, m.excess_delay.rho)),
            (Family::Weibull, DistSpec::weibull(m.rel_doppler.zeta, m.rel_doppler.kappa)),
        ];
        for (j, (family, spec)) in laws.into_iter().enumerate() {
            let spec = spec.map_err(|e| e.to_string())?;
            let xs = sample(&spec, 10_000, seed.wrapping_mul(31).wrapping_add((3 * k + j) as u64));
            let got = fit(family, &xs).map_err(|e| format!("{id} {}: {e}", family.name()))?;
            for (a, b) in got.param_vec().iter().zip(spec.param_vec()) {
                within(&format!("{id} {}", family.name()), *a, b, 0.05)?;
            }
        }
    }
    Ok(())
}

fn identities() -> Check {
    let bs = DistSpec::birnbaum_saunders(52.07, 1.355).map_err(|e| e.to_string())?;
    if (bs.cdf(52.07) - 0.5).abs() > 1e-12 {
        return Err(format!("BS cdf at eta = {}", bs.cdf(52.07)));
    }
    let w = DistSpec::weibull(0.4, 1.0).map_err(|e| e.to_string())?;
    let e = DistSpec::exponential(0.4).map_err(|e| e.to_string())?;
    for x in [0.01, 0.3, 1.0, 4.0] {
        if (w.cdf(x) - e.cdf(x)).abs() > 1e-12 {
            return Err(format!("Weibull shape 1 differs from exponential at {x}"));
        }
    }
    let ln = DistSpec::log_normal(3.0, 1.4).map_err(|e| e.to_string())?;
    if (ln.quantile(0.5) - 3f64.exp()).abs() > 1e-9 {
        return Err(format!("log-normal median {}", ln.quantile(0.5)));
    }
    Ok(())
}

fn single_path() -> Check {
    let pulse = Pulse::new(1e9);
    let grid = Grid { reference_delay_ns: 0.0, bins: 256, bin_ns: 1.0 };
    let path = PathSample { id: 1, amplitude: 0.5, phase: 1.0, delay_ns: 123.4 };
    let s = synth_snapshot::<StreamRng>(&[path], &grid, &pulse, 0.0, None).map_err(|e| e.to_string())?;
    let out = detect(&s, &pulse, &DetectConfig::default());
    match out.detections.as_slice() {
        [d] if (d.delay_ns - 123.4).abs() < 1e-3 && (d.amplitude - 0.5).abs() < 1e-4 => Ok(()),
        other => Err(format!("detections {other:?}")),
    }
}

fn file_formats(seed: u64) -> Check {
    let mut cfg = builtin_config(ScenarioId::HOT, seed);
    cfg.duration = 0.1;
    let header = Simulator::new(cfg.clone()).map_err(|e| e.to_string())?.header();
    let (sets, _) = run_simulation(cfg).map_err(|e| e.to_string())?;
    let mut w = CirWriter::new(Vec::new(), header).map_err(|e| e.to_string())?;
    for s in &sets {
        w.write_set(s).map_err(|e| e.to_string())?;
    }
    let bytes = w.finish().map_err(|e| e.to_string())?;
    let back: Vec<_> =
        CirReader::new(&bytes[..]).map_err(|e| e.to_string())?.collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    if back != sets {
        return Err("recording changed across write and read".into());
    }
    let db =
        extract_stream(header, sets.into_iter().map(Ok), &ExtractConfig::default(), 1).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    db.write_to(&mut buf).map_err(|e| e.to_string())?;
    let again = TrackDb::read_from(&buf[..]).map_err(|e| e.to_string())?;
    if again != db {
        return Err("track database changed across write and read".into());
    }
    Ok(())
}

pub fn self_test(args: &SelfTestArgs) -> ExitCode {
    let checks: [Named; 4] = [
        ("distribution refit", Box::new(|| refit(args.seed))),
        ("analytic identities", Box::new(identities)),
        ("single-path detection", Box::new(single_path)),
        ("file formats", Box::new(|| file_formats(args.seed))),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
