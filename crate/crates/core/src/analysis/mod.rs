//! Statistics of extracted tracks: per-set counts, newborn rates,
//! lifetimes, excess delays and relative Dopplers, with their fits and a
//! comparison against a reference model.

pub mod bins;
pub mod compare;
pub mod report;
pub mod samples;
pub mod sets;

pub use bins::{bin_by_distance, DistanceBin};
pub use compare::{compare_models, worst_checked, write_cdf_csv, write_deviations_csv, write_lambda_csv, Deviation};
pub use report::{
    build_report, fit_counts, AnalysisConfig, AnalysisReport, CountFit, FamilyFit, RunData, StatisticFit,
};
pub use samples::{
    excess_delay, relative_doppler, sample_table, DelaySample, DopplerSample, Guard, LifetimeSample, SampleTable,
};
pub use sets::{birth_rate, set_stats, sets_per_meter, BirthWindow, SetStats};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::extract::{ExtractConfig, ExtractMeta, PowerAccount, SetInfo, Track, TrackDb, TrackPoint};

    /// Database with `sets` sets at 50 ms and 100 m, plus one track per
    /// `(first, last)` span.
    pub fn db_with(tracks: &[(usize, usize)], sets: usize, v: f64) -> TrackDb {
        let sets: Vec<SetInfo> = (0..sets)
            .map(|i| SetInfo {
                index: i,
                t0: i as f64 * 0.05,
                d: 100.0,
                v_tx: v / 2.0,
                v_rx: v / 2.0,
                snapshots: 8,
                detections: 0,
                short_tracks: 0,
                full_tracks: 0,
                noise_level: 0.0,
                los_track: None,
                los_delay_ns: None,
            })
            .collect();
        let tracks = tracks
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| Track {
                id: k as u64 + 1,
                points: (a..=b)
                    .map(|i| TrackPoint {
                        set: i,
                        t: i as f64 * 0.05,
                        amplitude: 1.0,
                        delay_ns: 400.0,
                        doppler_hz: 100.0,
                    })
                    .collect(),
            })
            .collect();
        TrackDb {
            meta: ExtractMeta {
                bandwidth: 1e9,
                delay_bins: 512,
                set_count: sets.len() as u32,
                set_period: 0.05,
                config: ExtractConfig::default(),
                power: PowerAccount::default(),
                aborted_snapshots: 0,
            },
            sets,
            tracks,
        }
    }
}
