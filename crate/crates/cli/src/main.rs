//! `uwsim` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use uwsim::estimation::{frame_error_stats, optimize_frame, FrameErrorStats};
use uwsim::harness::{
    empirical_error_stats, fer_csv_string, full_preset, init_thread_pool, run_campaign_with, stats_csv_string,
    write_fer_csv, write_stats_csv, FerRecord, Link, SimConfig,
};
use uwsim::{Error, FrameGeometry};

#[derive(Parser, Debug)]
#[command(name = "uwsim", version, about = "UW channel estimation link simulator for MIMO CDD OTFS/OFDM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a FER/BER campaign over the configured SNR grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run every curve of the reference campaign; `--out` names a directory.
        #[arg(long)]
        full: bool,
    },
    /// Tabulate the analytic channel error budget over the candidate `M` and
    /// pick the best.
    OptimizeFrame {
        #[command(flatten)]
        common: Common,
    },
    /// Measure the channel error budget over the candidate `M` by simulation.
    ErrorStats {
        #[command(flatten)]
        common: Common,
    },
    /// Quick end-to-end sanity checks.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file with `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// CSV output path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set n_iter=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    waveform: Option<String>,
    /// Antenna setup such as `2x2`.
    #[arg(long)]
    antennas: Option<String>,
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    code_rate: Option<String>,
    /// Number of data sub-blocks.
    #[arg(short = 'm', long = "subblocks")]
    subblocks: Option<usize>,
    #[arg(long)]
    snr_start: Option<f64>,
    #[arg(long)]
    snr_stop: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_iter: Option<usize>,
    /// Count UW and prefix energy against E_b.
    #[arg(long)]
    charge_overhead: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl Common {
    fn load(&self) -> Result<SimConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
            None => SimConfig::default(),
        };
        let mut overrides: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        };
        push("waveform", self.waveform.clone());
        push("antennas", self.antennas.clone());
        push("modulation", self.modulation.clone());
        push("code_rate", self.code_rate.clone());
        push("m", self.subblocks.map(|v| v.to_string()));
        push("snr_start_db", self.snr_start.map(|v| v.to_string()));
        push("snr_stop_db", self.snr_stop.map(|v| v.to_string()));
        push("snr_step_db", self.snr_step.map(|v| v.to_string()));
        push("min_frame_errors", self.min_errors.map(|v| v.to_string()));
        push("max_frames", self.max_frames.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("n_iter", self.n_iter.map(|v| v.to_string()));
        if self.charge_overhead {
            push("charge_overhead", Some("true".into()));
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            overrides.push((k.to_string(), v.to_string()));
        }
        for (k, v) in overrides {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, csv: &str, write: impl FnOnce(&Path) -> uwsim::Result<()>) -> Result<(), Failure> {
    match out {
        Some(p) => {
            write(p)?;
            info!("wrote {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn simulate(cfg: &SimConfig, out: Option<&Path>) -> Result<Vec<FerRecord>, Failure> {
    info!(
        "{} {}x{} {} rate {} M={} N_UW={}, {} SNR points",
        cfg.waveform,
        cfg.n_t,
        cfg.n_r,
        cfg.modulation,
        cfg.code_rate,
        cfg.m,
        cfg.n_uw,
        cfg.snr_points().len()
    );
    let points = run_campaign_with(cfg, |p| {
        let r = &p.record;
        info!(
            "snr {:6.2} dB  frames {:7}  errors {:5}  fer {:.3e}  ber {:.3e}  {:.1}s",
            r.snr_db, r.frames_run, r.frame_errors, r.fer, r.ber, p.wallclock_s
        );
    })?;
    let records: Vec<FerRecord> = points.into_iter().map(|p| p.record).collect();
    emit(out, &fer_csv_string(&records)?, |p| write_fer_csv(p, &records))?;
    Ok(records)
}

fn simulate_full(base: &SimConfig, out: Option<&Path>) -> Result<(), Failure> {
    let dir = out.ok_or_else(|| Failure::Config("--full needs --out <directory>".into()))?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    for curve in full_preset(base) {
        info!("curve {}", curve.name);
        let path = dir.join(format!("{}.csv", curve.name));
        simulate(&curve.config, Some(&path))?;
    }
    Ok(())
}

fn print_table(title: &str, table: &[FrameErrorStats]) {
    println!("{title}");
    println!("{:>3}  {:>12}  {:>12}  {:>12}", "M", "sigma2_ce", "sigma2_d", "sigma2_total");
    for s in table {
        println!("{:>3}  {:>12.4e}  {:>12.4e}  {:>12.4e}", s.m, s.sigma2_ce, s.sigma2_d, s.total());
    }
}

fn optimizer_noise(cfg: &SimConfig) -> f64 {
    10f64.powf(-cfg.optimizer_snr_db / 10.0)
}

fn optimize(cfg: &SimConfig, out: Option<&Path>) -> Result<(), Failure> {
    let template = cfg.geometry()?;
    let opt = optimize_frame(&cfg.candidate_m, &template, &cfg.channel_profile()?, optimizer_noise(cfg))?;
    print_table(
        &format!("analytic channel errors at Es/sigma^2 = {} dB", cfg.optimizer_snr_db),
        &opt.table,
    );
    println!("M*={}", opt.best_m);
    if let Some(p) = out {
        write_stats_csv(p, &opt.table)?;
        info!("wrote {}", p.display());
    }
    Ok(())
}

fn error_stats(cfg: &SimConfig, out: Option<&Path>) -> Result<(), Failure> {
    let noise = optimizer_noise(cfg);
    let profile = cfg.channel_profile()?;
    let mut measured = Vec::new();
    let mut analytic = Vec::new();
    for &m in &cfg.candidate_m {
        let mut c = cfg.clone();
        c.m = m;
        let g = FrameGeometry::new(c.n, m, c.n_cp, c.n_uw, c.n_t)?;
        analytic.push(frame_error_stats(&g, &profile, noise)?);
        let e = empirical_error_stats(&c, noise, c.stats_frames, c.seed)?;
        info!("M={m}: {} frames", e.frames);
        measured.push(e.summary());
    }
    print_table(
        &format!(
            "measured channel errors at Es/sigma^2 = {} dB over {} frames",
            cfg.optimizer_snr_db, cfg.stats_frames
        ),
        &measured,
    );
    print_table("analytic", &analytic);
    if let Some(p) = out {
        write_stats_csv(p, &measured)?;
        info!("wrote {}", p.display());
    } else {
        print!("{}", stats_csv_string(&measured)?);
    }
    Ok(())
}

fn selftest(cfg: &SimConfig) -> Result<(), Failure> {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
        failures += usize::from(!ok);
    };
    for kind in ["ofdm", "otfs"] {
        let mut c = cfg.clone();
        c.set("waveform", kind)?;
        c.doppler_hz = Some(0.0);
        let link = Link::new(&c, 1e-9)?;
        let mut errors = 0;
        for s in 0..20 {
            errors += link.run_frame(s)?.bit_errors;
        }
        check(&format!("{kind} noiseless static frames"), errors == 0, format!("{errors} bit errors in 20 frames"));
    }
    let mut reference = SimConfig::default();
    reference.candidate_m = vec![1, 2, 4, 6, 8];
    let opt = optimize_frame(
        &reference.candidate_m,
        &reference.geometry()?,
        &reference.channel_profile()?,
        optimizer_noise(&reference),
    )?;
    check("reference frame optimizer", opt.best_m == 4, format!("M*={}", opt.best_m));
    let rec = vec![FerRecord {
        snr_db: 1.0,
        frames_run: 3,
        frame_errors: 1,
        bit_errors: 2,
        fer: 1.0 / 3.0,
        ber: 0.001,
        seed: 9,
    }];
    let csv = fer_csv_string(&rec)?;
    check(
        "csv header",
        csv.starts_with("snr_db,frames,frame_errors,bit_errors,fer,ber,seed\n"),
        csv.lines().next().unwrap_or("").to_string(),
    );
    if failures > 0 {
        return Err(Failure::Runtime(format!("{failures} self-test checks failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = init_thread_pool()?;
    info!("{workers} worker threads");
    match cli.command {
        Command::Simulate { common, full } => {
            let cfg = common.load()?;
            if full {
                simulate_full(&cfg, common.out.as_deref())
            } else {
                simulate(&cfg, common.out.as_deref()).map(|_| ())
            }
        }
        Command::OptimizeFrame { common } => optimize(&common.load()?, common.out.as_deref()),
        Command::ErrorStats { common } => error_stats(&common.load()?, common.out.as_deref()),
        Command::Selftest { common } => selftest(&common.load()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            match f {
                Failure::Config(_) => ExitCode::from(1),
                Failure::Runtime(_) => ExitCode::from(2),
            }
        }
    }
}
