use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use vmpc_core::analysis::{
    build_report, compare_models, worst_checked, write_cdf_csv, write_deviations_csv, write_lambda_csv, AnalysisConfig,
    AnalysisReport, CountFit, Deviation, RunData, StatisticFit,
};
use vmpc_core::extract::{extract_stream, power_loss, ExtractConfig, Threshold, TrackDb};
use vmpc_core::scenario::{builtin_model, load_model, ScenarioModel};
use vmpc_core::sim::cirfile::{CirReader, CirWriter};
use vmpc_core::sim::kinematics::kmh;
use vmpc_core::sim::presets::preset_config;
use vmpc_core::sim::{SimConfig, Simulator};
use vmpc_core::{Error, Result};

use crate::args::{
    AnalysisFlags, AnalyzeArgs, ExtractArgs, ExtractFlags, ModelArgs, RoundtripArgs, SimArgs, SimulateArgs,
};

/// Exit status for an error: 2 for unusable input, 3 for I/O and parsing.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation { .. } | Error::Config(_) | Error::GridOverflow { .. } => 2,
        _ => 3,
    }
}

fn usage(msg: &str) -> Error {
    Error::Config(msg.to_string())
}

fn model_from(args: &ModelArgs) -> Result<Option<ScenarioModel>> {
    match (&args.scenario, &args.model) {
        (Some(id), _) => Ok(Some(builtin_model(*id))),
        (None, Some(path)) => {
            let m = load_model(path)?;
            m.validate()?;
            Ok(Some(m))
        }
        (None, None) => Ok(None),
    }
}

fn required_model(args: &ModelArgs) -> Result<ScenarioModel> {
    model_from(args)?.ok_or_else(|| usage("one of --scenario or --model is required"))
}

fn sim_config(model: ScenarioModel, sim: &SimArgs, seed: u64, calibrate: bool) -> Result<SimConfig> {
    let mut cfg = preset_config(model, seed);
    if let Some(v) = sim.duration {
        cfg.duration = v;
    }
    if let Some(v) = sim.set_period {
        cfg.set_period = v;
    }
    if let Some(v) = sim.snapshots {
        cfg.snapshots_per_set = v;
    }
    if let Some(v) = sim.v_tx {
        cfg.kinematics.v_tx = kmh(v);
    }
    if let Some(v) = sim.v_rx {
        cfg.kinematics.v_rx = kmh(v);
    }
    if let Some(v) = sim.d0 {
        cfg.kinematics.d0 = v;
    }
    if let Some(v) = sim.noise_floor_db {
        cfg.noise_floor_db = Some(v);
    }
    if sim.noiseless {
        cfg.noise_floor_db = None;
    }
    if let Some(v) = sim.carrier {
        cfg.carrier = v;
    }
    cfg.calibrate = calibrate;
    cfg.validate()?;
    Ok(cfg)
}

/// Stream a simulation into a recording file and a ground-truth sidecar.
fn simulate_to(cfg: SimConfig, recording: &Path, truth: &Path) -> Result<usize> {
    let mut sim = Simulator::new(cfg)?;
    let mut w = CirWriter::create(recording, sim.header())?;
    let mut obs = Vec::new();
    let mut sets = 0;
    for s in sim.by_ref() {
        let s = s?;
        w.write_set(&s.set)?;
        obs.extend(s.truth);
        sets += 1;
    }
    w.finish()?;
    sim.ground_truth(obs).save(truth)?;
    Ok(sets)
}

fn extract_config(flags: &ExtractFlags, carrier: Option<f64>) -> ExtractConfig {
    let mut cfg = ExtractConfig::default();
    if let Some(c) = carrier {
        cfg.carrier = c;
    }
    if let Some(db) = flags.threshold_db {
        cfg.detect.threshold = Threshold::OffsetDb { db };
    }
    if let Some(p) = flags.false_alarm {
        cfg.detect.threshold = Threshold::FalseAlarm { p };
    }
    if let Some(chi) = flags.chi_ns {
        cfg.chi_ns = chi;
    }
    cfg
}

fn extract_file(path: &Path, cfg: &ExtractConfig, jobs: usize) -> Result<TrackDb> {
    let mut reader = CirReader::open(path)?;
    let header = reader.header();
    let db = extract_stream(header, reader.by_ref(), cfg, jobs)?;
    reader.expect_end()?;
    Ok(db)
}

fn analysis_config(model: Option<&ScenarioModel>, flags: &AnalysisFlags) -> AnalysisConfig {
    let mut cfg = model.map_or_else(AnalysisConfig::default, AnalysisConfig::for_model);
    if let Some(v) = flags.delay_floor {
        cfg.delay_floor_ns = v;
    }
    if let Some(v) = flags.bin_width {
        cfg.bin_width_m = v;
    }
    if let Some(v) = flags.guard_bins {
        cfg.guard.bins = v;
    }
    cfg
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_report(dir: &Path, report: &AnalysisReport, data: &RunData, deviations: Option<&[Deviation]>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = create(&dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    write_cdf_csv(report, &data.samples, create(&dir.join("cdf.csv"))?)?;
    write_lambda_csv(report, create(&dir.join("lambda.csv"))?)?;
    if let Some(rows) = deviations {
        write_deviations_csv(rows, create(&dir.join("deviations.csv"))?)?;
    }
    Ok(())
}

fn print_counts(name: &str, fit: &Option<CountFit>) {
    match fit {
        Some(f) => println!(
            "{name:<13} lambda(d) = {:.4} + {:.4e} d + {:.4e} d^2  mean {:.3}  stdev {:.3}  n {}",
            f.poly.p0, f.poly.p1, f.poly.p2, f.mean_lambda, f.stdev, f.n
        ),
        None => println!("{name:<13} no fit"),
    }
}

fn print_statistic(name: &str, fit: &Option<StatisticFit>) {
    let rate = |g: Option<vmpc_core::GofResult>| g.map_or("-".to_string(), |g| format!("p={:.3}", g.p_value));
    match fit {
        Some(f) => println!(
            "{name:<13} {}  chi2 {}  ks {}  n {}",
            f.primary.spec,
            rate(f.primary.chi2),
            rate(f.primary.ks),
            f.n
        ),
        None => println!("{name:<13} no fit"),
    }
}

fn print_report(report: &AnalysisReport) {
    let c = &report.counts;
    println!(
        "runs {}  sets {}  newborn {}  single-set {}  censored {}  continuations {}",
        c.runs, c.sets, c.newborn, c.single_set_tracks, c.censored_lifetimes, c.guarded_starts
    );
    print_counts("number", &report.number);
    print_counts("birth", &report.birth);
    print_statistic("lifetime", &report.lifetime);
    print_statistic("excess delay", &report.excess_delay);
    print_statistic("rel. Doppler", &report.rel_doppler);
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn print_deviations(rows: &[Deviation]) {
    println!("{:<13} {:<6} {:>12} {:>12} {:>8}", "statistic", "param", "reference", "estimate", "rel.err");
    for r in rows {
        let est = r.estimate.map_or("-".to_string(), |v| format!("{v:.5}"));
        let err = r.rel_err.map_or("-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        println!(
            "{:<13} {:<6} {:>12.5} {:>12} {:>8}{}",
            r.statistic,
            r.parameter,
            r.reference,
            est,
            err,
            if r.checked { "  *" } else { "" }
        );
    }
}

/// Exit status of a comparison against `tolerance`.
fn judge(rows: &[Deviation], tolerance: f64) -> ExitCode {
    match worst_checked(rows) {
        Some(w) if w <= tolerance => {
            println!("worst checked deviation {:.2}% within {:.2}%", 100.0 * w, 100.0 * tolerance);
            ExitCode::SUCCESS
        }
        Some(w) => {
            println!("worst checked deviation {:.2}% exceeds {:.2}%", 100.0 * w, 100.0 * tolerance);
            ExitCode::from(1)
        }
        None => {
            println!("a checked parameter could not be estimated");
            ExitCode::from(1)
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let model = required_model(&args.model)?;
    let stem = args.name.clone().unwrap_or_else(|| format!("{}-{}", model.id, args.sim.seed));
    let cfg = sim_config(model, &args.sim, args.sim.seed, args.calibrate)?;
    fs::create_dir_all(&args.out)?;
    let recording = args.out.join(format!("{stem}.cir"));
    let truth = args.out.join(format!("{stem}.truth.json"));
    let sets = simulate_to(cfg, &recording, &truth)?;
    println!("{} sets -> {}", sets, recording.display());
    println!("ground truth -> {}", truth.display());
    Ok(ExitCode::SUCCESS)
}

fn default_tracks_path(input: &Path) -> PathBuf {
    input.with_extension("tracks.jsonl")
}

fn print_extraction(db: &TrackDb) {
    println!("sets {}  tracks {}  aborted snapshots {}", db.sets.len(), db.tracks.len(), db.meta.aborted_snapshots);
    match power_loss(&db.meta.power) {
        Ok((det, long)) => {
            println!("power loss: detection {det:.2} dB  long-term {long:.2} dB  total {:.2} dB", det + long)
        }
        Err(e) => println!("power loss: {e}"),
    }
}

pub fn extract(args: &ExtractArgs) -> Result<ExitCode> {
    let cfg = extract_config(&args.flags, args.carrier);
    let db = extract_file(&args.input, &cfg, args.flags.jobs)?;
    let out = args.out.clone().unwrap_or_else(|| default_tracks_path(&args.input));
    db.save(&out)?;
    print_extraction(&db);
    println!("tracks -> {}", out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let model = model_from(&args.model)?;
    if args.tolerance.is_some() && model.is_none() {
        return Err(usage("--tolerance needs --scenario or --model"));
    }
    let cfg = analysis_config(model.as_ref(), &args.analysis);
    let mut data = RunData::default();
    for path in &args.tracks {
        data.merge(RunData::from_db(&TrackDb::load(path)?, &cfg));
    }
    let report = build_report(&data, &cfg)?;
    let rows = model.as_ref().map(|m| compare_models(&report, m, args.calibrated));
    write_report(&args.out, &report, &data, rows.as_deref())?;
    print_report(&report);
    match (&rows, args.tolerance) {
        (Some(rows), Some(tol)) => {
            print_deviations(rows);
            Ok(judge(rows, tol))
        }
        (Some(rows), None) => {
            print_deviations(rows);
            Ok(ExitCode::SUCCESS)
        }
        _ => Ok(ExitCode::SUCCESS),
    }
}

pub fn roundtrip(args: &RoundtripArgs) -> Result<ExitCode> {
    let model = required_model(&args.model)?;
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    fs::create_dir_all(&args.out)?;
    let cfg = analysis_config(Some(&model), &args.analysis);
    let mut data = RunData::default();
    for k in 0..args.runs {
        let seed = args.sim.seed + k;
        let sim = sim_config(model.clone(), &args.sim, seed, !args.uncalibrated)?;
        let carrier = sim.carrier;
        let stem = format!("{}-{}", model.id, seed);
        let recording = args.out.join(format!("{stem}.cir"));
        let truth = args.out.join(format!("{stem}.truth.json"));
        let sets = simulate_to(sim, &recording, &truth)?;
        let db = extract_file(&recording, &extract_config(&args.extract, Some(carrier)), args.extract.jobs)?;
        db.save(default_tracks_path(&recording))?;
        if !args.keep_recordings {
            fs::remove_file(&recording)?;
        }
        println!("seed {seed}: {sets} sets, {} tracks", db.tracks.len());
        data.merge(RunData::from_db(&db, &cfg));
    }
    let report = build_report(&data, &cfg)?;
    let rows = compare_models(&report, &model, !args.uncalibrated);
    write_report(&args.out, &report, &data, Some(&rows))?;
    print_report(&report);
    print_deviations(&rows);
    Ok(judge(&rows, args.tolerance))
}
