//! Monte-Carlo campaigns, frame-error statistics and CSV emission.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::link::{FrameOutcome, Link};
use crate::channel::{equivalent_block_channel, propagate_with_rng};
use crate::error::{Error, Result};
use crate::estimation::{ChannelEstimate, FrameErrorStats};
use crate::receiver::fd_demux;

/// Frames simulated per parallel batch. Fixed so that results do not depend
/// on the worker count.
pub const BATCH_FRAMES: u64 = 64;

/// Sizes the global worker pool from `SIM_THREADS` when it is set and
/// returns the number of workers in use.
pub fn init_thread_pool() -> Result<usize> {
    if let Ok(v) = std::env::var("SIM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("SIM_THREADS must be a positive integer, got `{v}`")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// SplitMix64 finalizer applied to `base ^ f(index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One point of a FER curve. Serialises to the `simulate` CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub snr_db: f64,
    #[serde(rename = "frames")]
    pub frames_run: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub seed: u64,
}

/// A [`FerRecord`] with run metadata that is not part of the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub record: FerRecord,
    pub wallclock_s: f64,
    /// Frame errors after each decoder call, over the same frames.
    pub iteration_frame_errors: Vec<u64>,
}

impl PointStats {
    pub fn iteration_fer(&self, i: usize) -> f64 {
        self.iteration_frame_errors[i] as f64 / self.record.frames_run as f64
    }
}

/// Seed of the SNR point with grid index `index`.
pub fn point_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// Runs frames from `seed` until `min_frame_errors` or `max_frames`.
pub fn run_point(cfg: &SimConfig, snr_db: f64, seed: u64) -> Result<PointStats> {
    let start = Instant::now();
    let link = Link::new(cfg, cfg.noise_var(snr_db)?)?;
    let calls = link.decoder_calls();
    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    let mut iteration_frame_errors = vec![0u64; calls];
    'outer: while frames < cfg.max_frames {
        let first = frames;
        let count = BATCH_FRAMES.min(cfg.max_frames - first);
        let batch: Vec<FrameOutcome> = (first..first + count)
            .into_par_iter()
            .map(|i| link.run_frame(derive_seed(seed, i)))
            .collect::<Result<_>>()?;
        for out in batch {
            frames += 1;
            bit_errors += out.bit_errors;
            frame_errors += u64::from(out.frame_error);
            for (acc, e) in iteration_frame_errors.iter_mut().zip(&out.iteration_errors) {
                *acc += u64::from(*e);
            }
            if frame_errors >= cfg.min_frame_errors {
                break 'outer;
            }
        }
    }
    let info = link.info_len() as u64;
    Ok(PointStats {
        record: FerRecord {
            snr_db,
            frames_run: frames,
            frame_errors,
            bit_errors,
            fer: frame_errors as f64 / frames as f64,
            ber: bit_errors as f64 / (frames * info) as f64,
            seed,
        },
        wallclock_s: start.elapsed().as_secs_f64(),
        iteration_frame_errors,
    })
}

/// Runs every point of the SNR grid in order. `progress` sees each point as
/// it completes.
pub fn run_campaign_with<F: FnMut(&PointStats)>(cfg: &SimConfig, mut progress: F) -> Result<Vec<PointStats>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (i, snr) in cfg.snr_points().into_iter().enumerate() {
        let p = run_point(cfg, snr, point_seed(cfg.seed, i))?;
        progress(&p);
        out.push(p);
    }
    Ok(out)
}

pub fn run_campaign(cfg: &SimConfig) -> Result<Vec<PointStats>> {
    run_campaign_with(cfg, |_| {})
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serialises rows to CSV text with the header derived from `T`.
fn to_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.into_inner().map_err(|e| io_err(path)(e.into_error()))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

pub fn fer_csv_string(records: &[FerRecord]) -> Result<String> {
    let bytes = to_csv(records, Path::new("<memory>"))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_fer_csv(path: &Path, records: &[FerRecord]) -> Result<()> {
    write_atomic(path, &to_csv(records, path)?)
}

pub fn read_fer_csv(path: &Path) -> Result<Vec<FerRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}

#[derive(Serialize)]
struct StatsRow {
    #[serde(rename = "M")]
    m: usize,
    sigma2_ce: f64,
    sigma2_d: f64,
    sigma2_total: f64,
}

pub fn stats_csv_string(table: &[FrameErrorStats]) -> Result<String> {
    let rows: Vec<StatsRow> = table
        .iter()
        .map(|s| StatsRow {
            m: s.m,
            sigma2_ce: s.sigma2_ce,
            sigma2_d: s.sigma2_d,
            sigma2_total: s.total(),
        })
        .collect();
    let bytes = to_csv(&rows, Path::new("<memory>"))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_stats_csv(path: &Path, table: &[FrameErrorStats]) -> Result<()> {
    write_atomic(path, stats_csv_string(table)?.as_bytes())
}

/// Measured channel errors of the UW estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalErrors {
    pub m: usize,
    /// Mean squared error of the estimate against the block-averaged
    /// channel, per sub-block.
    pub sigma2_ce: Vec<f64>,
    /// Off-diagonal power of the frequency-domain channel.
    pub sigma2_d: f64,
    pub frames: u64,
}

impl EmpiricalErrors {
    /// Sub-block averages in the layout of the analytic table.
    pub fn summary(&self) -> FrameErrorStats {
        FrameErrorStats {
            m: self.m,
            sigma2_ce: self.sigma2_ce.iter().sum::<f64>() / self.m as f64,
            sigma2_d: self.sigma2_d,
        }
    }
}

/// Monte-Carlo counterpart of the analytic error model for the geometry of
/// `cfg`, measured over `frames` frames at noise variance `noise_var`.
pub fn empirical_error_stats(cfg: &SimConfig, noise_var: f64, frames: u64, seed: u64) -> Result<EmpiricalErrors> {
    if frames == 0 {
        return Err(Error::Config("error statistics need at least one frame".into()));
    }
    let link = Link::new(cfg, noise_var)?;
    let geom = &cfg.geometry()?;
    let profile = &cfg.channel_profile()?;
    let n_r = cfg.n_r;
    let per_frame = (0..frames)
        .into_par_iter()
        .map(|f| -> Result<(Vec<f64>, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, f));
            let (_, frame) = link.transmit(&mut rng)?;
            let chan = link.draw_channel(rng.random())?;
            let rx = propagate_with_rng(&frame, &chan, noise_var, &mut rng)?;
            let obs = fd_demux(&rx, geom)?;
            let est = link.estimator().estimate(&obs.uw)?;
            let genie = ChannelEstimate::genie(&chan, geom, profile)?;
            let mut ce = vec![0.0; geom.m];
            let mut ici = 0.0;
            for (m, ce_m) in ce.iter_mut().enumerate() {
                for nr in 0..n_r {
                    *ce_m += est.lambda[m][nr]
                        .iter()
                        .zip(&genie.lambda[m][nr])
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        / geom.k as f64;
                    let eq = equivalent_block_channel(&chan, geom, m, nr)?;
                    let total: f64 = eq.taps.iter().map(|h| h.norm_sqr()).sum::<f64>() / geom.k as f64;
                    let mean: f64 = eq.mean_taps().iter().map(|h| h.norm_sqr()).sum();
                    ici += total - mean;
                }
            }
            Ok((ce, ici))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ce = vec![0.0; geom.m];
    let mut ici = 0.0;
    for (c, d) in per_frame {
        for (acc, v) in ce.iter_mut().zip(c) {
            *acc += v;
        }
        ici += d;
    }
    let per_block = (frames as usize * n_r) as f64;
    Ok(EmpiricalErrors {
        m: geom.m,
        sigma2_ce: ce.into_iter().map(|v| v / per_block).collect(),
        sigma2_d: ici / (per_block * geom.m as f64),
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicm::{CodeRate, Modulation};

    fn small() -> SimConfig {
        let mut c = SimConfig::default();
        c.code_rate = CodeRate::Half;
        c.modulation = Modulation::Qpsk;
        c.max_frames = 150;
        c.min_frame_errors = 20;
        c
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::HashSet<u64> = (0..10_000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(s.len(), 10_000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn point_is_deterministic_and_conserves_work() {
        let c = small();
        let a = run_point(&c, 4.0, 9).unwrap();
        let b = run_point(&c, 4.0, 9).unwrap();
        assert_eq!(a.record, b.record);
        let r = &a.record;
        assert!(r.frames_run <= c.max_frames);
        assert!(r.frame_errors >= c.min_frame_errors || r.frames_run == c.max_frames);
        assert!((r.fer - r.frame_errors as f64 / r.frames_run as f64).abs() < 1e-15);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let c = small();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| run_point(&c, 3.0, 5).unwrap());
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = four.install(|| run_point(&c, 3.0, 5).unwrap());
        assert_eq!(a.record, b.record);
        assert_eq!(a.iteration_frame_errors, b.iteration_frame_errors);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let recs = vec![
            FerRecord {
                snr_db: 1.5,
                frames_run: 10,
                frame_errors: 3,
                bit_errors: 17,
                fer: 0.3,
                ber: 17.0 / 2820.0,
                seed: u64::MAX,
            },
            FerRecord {
                snr_db: 3.5,
                frames_run: 200_000,
                frame_errors: 0,
                bit_errors: 0,
                fer: 0.0,
                ber: 0.0,
                seed: 0,
            },
        ];
        let s = fer_csv_string(&recs).unwrap();
        assert!(s.starts_with("snr_db,frames,frame_errors,bit_errors,fer,ber,seed\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fer.csv");
        write_fer_csv(&p, &recs).unwrap();
        assert_eq!(read_fer_csv(&p).unwrap(), recs);
        let bad = dir.path().join("missing/fer.csv");
        assert!(write_fer_csv(&bad, &recs).unwrap_err().to_string().contains("missing/fer.csv"));
    }

    #[test]
    fn stats_header() {
        let t = [FrameErrorStats {
            m: 4,
            sigma2_ce: 0.25,
            sigma2_d: 0.5,
        }];
        assert_eq!(
            stats_csv_string(&t).unwrap(),
            "M,sigma2_ce,sigma2_d,sigma2_total\n4,0.25,0.5,0.75\n"
        );
    }
}
