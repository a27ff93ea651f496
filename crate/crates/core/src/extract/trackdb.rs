//! Track database: JSON Lines text.
//!
//! The first line is the `meta` record, followed by one `set` record per
//! recording set and one `point` record per track point:
//!
//! ```text
//! {"kind":"meta", ...}
//! {"kind":"set","index":0, ...}
//! {"kind":"point","k":1,"i":0,"t":0.0014,"a":3.1e-6,"tau":338.2,"nu":12.5}
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::long::{Track, TrackPoint};
use super::pipeline::ExtractConfig;
use super::power::PowerAccount;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractMeta {
    pub bandwidth: f64,
    pub delay_bins: u32,
    pub set_count: u32,
    /// Median spacing of set start times, seconds.
    pub set_period: f64,
    pub config: ExtractConfig,
    pub power: PowerAccount,
    /// Snapshots whose subtraction stopped early.
    pub aborted_snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetInfo {
    pub index: usize,
    pub t0: f64,
    pub d: f64,
    pub v_tx: f64,
    pub v_rx: f64,
    pub snapshots: usize,
    pub detections: usize,
    pub short_tracks: usize,
    pub full_tracks: usize,
    /// Mean estimated noise power per bin.
    pub noise_level: f64,
    pub los_track: Option<u64>,
    pub los_delay_ns: Option<f64>,
}

impl SetInfo {
    pub fn v_sum(&self) -> f64 {
        self.v_tx + self.v_rx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackDb {
    pub meta: ExtractMeta,
    pub sets: Vec<SetInfo>,
    pub tracks: Vec<Track>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Meta(ExtractMeta),
    Set(SetInfo),
    Point { k: u64, i: usize, t: f64, a: f64, tau: f64, nu: f64 },
}

fn parse_err(line: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse { what: format!("track database line {line}"), message: message.to_string() }
}

impl TrackDb {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut put = |r: &Record| -> Result<()> {
            serde_json::to_writer(&mut w, r).map_err(|e| parse_err(0, e))?;
            w.write_all(b"\n")?;
            Ok(())
        };
        put(&Record::Meta(self.meta.clone()))?;
        for s in &self.sets {
            put(&Record::Set(s.clone()))?;
        }
        for tr in &self.tracks {
            for p in &tr.points {
                put(&Record::Point { k: tr.id, i: p.set, t: p.t, a: p.amplitude, tau: p.delay_ns, nu: p.doppler_hz })?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut meta = None;
        let mut sets = Vec::new();
        let mut tracks: BTreeMap<u64, Vec<TrackPoint>> = BTreeMap::new();
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Record>(&line).map_err(|e| parse_err(lineno, e))? {
                Record::Meta(m) => {
                    if meta.replace(m).is_some() {
                        return Err(parse_err(lineno, "second meta record"));
                    }
                }
                Record::Set(s) => sets.push(s),
                Record::Point { k, i, t, a, tau, nu } => {
                    let pts = tracks.entry(k).or_default();
                    if let Some(last) = pts.last() {
                        if last.set + 1 != i {
                            return Err(parse_err(lineno, format!("track {k} jumps from set {} to {i}", last.set)));
                        }
                    }
                    pts.push(TrackPoint { set: i, t, amplitude: a, delay_ns: tau, doppler_hz: nu });
                }
            }
        }
        let meta = meta.ok_or_else(|| parse_err(1, "missing meta record"))?;
        let tracks = tracks.into_iter().map(|(id, points)| Track { id, points }).collect();
        Ok(TrackDb { meta, sets, tracks })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        TrackDb::read_from(File::open(path)?)
    }

    pub fn set(&self, index: usize) -> Option<&SetInfo> {
        self.sets.binary_search_by_key(&index, |s| s.index).ok().map(|k| &self.sets[k])
    }
}
