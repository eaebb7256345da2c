//! Scenario configuration, per-frame link simulation and Monte-Carlo
//! campaigns.

mod campaign;
mod config;
mod link;
mod preset;

pub use campaign::{
    derive_seed, empirical_error_stats, fer_csv_string, init_thread_pool, point_seed, read_fer_csv, run_campaign, run_campaign_with,
    run_point, stats_csv_string, write_atomic, write_fer_csv, write_stats_csv, EmpiricalErrors, FerRecord, PointStats, BATCH_FRAMES,
};
pub use config::{EstimationMode, ProfileKind, SimConfig};
pub use link::{FrameOutcome, Link};
pub use preset::{full_preset, PresetCurve};
