//! Multipath component extraction from recorded impulse responses:
//! detection, short-term tracking inside a set, long-term tracking across
//! sets and power-loss accounting.

pub mod detect;
pub mod doppler;
pub mod long;
pub mod noise;
pub mod pipeline;
pub mod power;
pub mod score;
pub mod short;
pub mod trackdb;

pub use detect::{detect, DetectConfig, DetectOutcome, Detection};
pub use doppler::{estimate_doppler, DopplerEstimate};
pub use long::{track_long, LongTracker, Track, TrackPoint};
pub use noise::{estimate_noise_floor, Threshold};
pub use pipeline::{extract_set, extract_stream, identify_los, ExtractConfig, Extractor, SetExtraction};
pub use power::{power_loss, PowerAccount};
pub use score::{score_tracks, PathScore, ScoreConfig, TrackScore};
pub use short::{track_short, ShortTrack, ShortTrackConfig};
pub use trackdb::{ExtractMeta, SetInfo, TrackDb};
