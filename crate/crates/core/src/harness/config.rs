//! Scenario configuration in flat `key = value` text.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::bicm::{CodeConfig, CodeRate, Constellation, Modulation, Termination};
use crate::channel::{doppler_shift, ChannelProfile};
use crate::error::{Error, Result};
use crate::receiver::PicFeedback;
use crate::waveform::{FrameGeometry, WaveformKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Eva,
    Flat,
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eva" => Ok(ProfileKind::Eva),
            "flat" => Ok(ProfileKind::Flat),
            other => Err(Error::Config(format!("unknown channel profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMode {
    /// Unique-word estimation with Wiener interpolation.
    UniqueWord,
    /// Block-averaged true channel.
    Genie,
}

impl FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uw" => Ok(EstimationMode::UniqueWord),
            "genie" => Ok(EstimationMode::Genie),
            other => Err(Error::Config(format!("unknown channel estimation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub n_cp: usize,
    pub n_uw: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub waveform: WaveformKind,
    pub code_rate: CodeRate,
    pub modulation: Modulation,
    pub profile: ProfileKind,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub speed_kmh: f64,
    /// Overrides the Doppler shift derived from carrier and speed.
    pub doppler_hz: Option<f64>,
    pub estimation: EstimationMode,
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub interleaver_seed: u64,
    pub n_iter: usize,
    pub pic_feedback: PicFeedback,
    pub charge_overhead: bool,
    pub candidate_m: Vec<usize>,
    /// `E_s / sigma^2` in dB at which the frame optimizer evaluates.
    pub optimizer_snr_db: f64,
    /// Frames per sub-block count for empirical error statistics.
    pub stats_frames: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 288,
            m: 4,
            n_cp: 16,
            n_uw: 32,
            n_t: 2,
            n_r: 2,
            waveform: WaveformKind::Otfs,
            code_rate: CodeRate::ThreeQuarters,
            modulation: Modulation::Qam16,
            profile: ProfileKind::Eva,
            bandwidth_hz: 4.32e6,
            carrier_hz: 5.9e9,
            speed_kmh: 350.0,
            doppler_hz: None,
            estimation: EstimationMode::UniqueWord,
            snr_start_db: 0.0,
            snr_stop_db: 30.0,
            snr_step_db: 2.0,
            min_frame_errors: 200,
            max_frames: 200_000,
            seed: 1,
            interleaver_seed: 0x5eed,
            n_iter: 3,
            pic_feedback: PicFeedback::Posterior,
            charge_overhead: false,
            candidate_m: vec![1, 2, 4, 6, 8],
            optimizer_snr_db: 15.0,
            stats_frames: 2000,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl SimConfig {
    /// Every recognised key.
    pub const KEYS: [&'static str; 29] = [
        "n",
        "m",
        "n_cp",
        "n_uw",
        "n_t",
        "n_r",
        "waveform",
        "code_rate",
        "modulation",
        "profile",
        "bandwidth_hz",
        "carrier_hz",
        "speed_kmh",
        "doppler_hz",
        "estimation",
        "snr_start_db",
        "snr_stop_db",
        "snr_step_db",
        "min_frame_errors",
        "max_frames",
        "seed",
        "interleaver_seed",
        "n_iter",
        "pic_feedback",
        "charge_overhead",
        "candidate_m",
        "optimizer_snr_db",
        "stats_frames",
        "antennas",
    ];

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "n" => self.n = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "n_cp" => self.n_cp = parse(key, value)?,
            "n_uw" => self.n_uw = parse(key, value)?,
            "n_t" => self.n_t = parse(key, value)?,
            "n_r" => self.n_r = parse(key, value)?,
            "antennas" => {
                let (t, r) = value
                    .trim()
                    .split_once(['x', 'X'])
                    .ok_or_else(|| Error::Config(format!("antennas must look like `2x2`, got `{value}`")))?;
                self.n_t = parse(key, t)?;
                self.n_r = parse(key, r)?;
            }
            "waveform" => self.waveform = value.parse()?,
            "code_rate" => self.code_rate = value.parse()?,
            "modulation" => self.modulation = value.parse()?,
            "profile" => self.profile = value.parse()?,
            "bandwidth_hz" => self.bandwidth_hz = parse(key, value)?,
            "carrier_hz" => self.carrier_hz = parse(key, value)?,
            "speed_kmh" => self.speed_kmh = parse(key, value)?,
            "doppler_hz" => {
                self.doppler_hz = match value.trim() {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "estimation" => self.estimation = value.parse()?,
            "snr_start_db" => self.snr_start_db = parse(key, value)?,
            "snr_stop_db" => self.snr_stop_db = parse(key, value)?,
            "snr_step_db" => self.snr_step_db = parse(key, value)?,
            "min_frame_errors" => self.min_frame_errors = parse(key, value)?,
            "max_frames" => self.max_frames = parse::<f64>(key, value).map(|v| v as u64)?,
            "seed" => self.seed = parse(key, value)?,
            "interleaver_seed" => self.interleaver_seed = parse(key, value)?,
            "n_iter" => self.n_iter = parse(key, value)?,
            "pic_feedback" => self.pic_feedback = value.parse()?,
            "charge_overhead" => self.charge_overhead = parse_bool(key, value)?,
            "candidate_m" => {
                self.candidate_m = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "optimizer_snr_db" => self.optimizer_snr_db = parse(key, value)?,
            "stats_frames" => self.stats_frames = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Renders the configuration in the format accepted by [`SimConfig::parse_str`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let rate = match self.code_rate {
            CodeRate::Half => "1/2",
            CodeRate::ThreeQuarters => "3/4",
        };
        let modulation = match self.modulation {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        };
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "n_cp = {}", self.n_cp);
        let _ = writeln!(s, "n_uw = {}", self.n_uw);
        let _ = writeln!(s, "n_t = {}", self.n_t);
        let _ = writeln!(s, "n_r = {}", self.n_r);
        let _ = writeln!(s, "waveform = {}", self.waveform.to_string().to_lowercase());
        let _ = writeln!(s, "code_rate = {rate}");
        let _ = writeln!(s, "modulation = {modulation}");
        let _ = writeln!(
            s,
            "profile = {}",
            match self.profile {
                ProfileKind::Eva => "eva",
                ProfileKind::Flat => "flat",
            }
        );
        let _ = writeln!(s, "bandwidth_hz = {}", self.bandwidth_hz);
        let _ = writeln!(s, "carrier_hz = {}", self.carrier_hz);
        let _ = writeln!(s, "speed_kmh = {}", self.speed_kmh);
        match self.doppler_hz {
            Some(v) => {
                let _ = writeln!(s, "doppler_hz = {v}");
            }
            None => {
                let _ = writeln!(s, "doppler_hz = auto");
            }
        }
        let _ = writeln!(
            s,
            "estimation = {}",
            match self.estimation {
                EstimationMode::UniqueWord => "uw",
                EstimationMode::Genie => "genie",
            }
        );
        let _ = writeln!(s, "snr_start_db = {}", self.snr_start_db);
        let _ = writeln!(s, "snr_stop_db = {}", self.snr_stop_db);
        let _ = writeln!(s, "snr_step_db = {}", self.snr_step_db);
        let _ = writeln!(s, "min_frame_errors = {}", self.min_frame_errors);
        let _ = writeln!(s, "max_frames = {}", self.max_frames);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "interleaver_seed = {}", self.interleaver_seed);
        let _ = writeln!(s, "n_iter = {}", self.n_iter);
        let _ = writeln!(s, "pic_feedback = {}", self.pic_feedback);
        let _ = writeln!(s, "charge_overhead = {}", self.charge_overhead);
        let ms: Vec<String> = self.candidate_m.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "candidate_m = {}", ms.join(","));
        let _ = writeln!(s, "optimizer_snr_db = {}", self.optimizer_snr_db);
        let _ = writeln!(s, "stats_frames = {}", self.stats_frames);
        s
    }

    pub fn geometry(&self) -> Result<FrameGeometry> {
        FrameGeometry::new(self.n, self.m, self.n_cp, self.n_uw, self.n_t)
    }

    pub fn doppler(&self) -> f64 {
        self.doppler_hz
            .unwrap_or_else(|| doppler_shift(self.carrier_hz, self.speed_kmh / 3.6))
    }

    pub fn channel_profile(&self) -> Result<ChannelProfile> {
        match self.profile {
            ProfileKind::Eva => ChannelProfile::eva(self.bandwidth_hz, self.doppler()),
            ProfileKind::Flat => ChannelProfile::flat(self.bandwidth_hz, self.doppler()),
        }
    }

    pub fn code(&self) -> CodeConfig {
        CodeConfig::new(self.code_rate).with_termination(Termination::ZeroTail)
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::new(self.modulation)
    }

    pub fn coded_len(&self) -> usize {
        self.n * self.modulation.bits_per_symbol()
    }

    pub fn info_len(&self) -> Result<usize> {
        self.code().info_len_for(self.coded_len())
    }

    /// Checks every cross-parameter invariant.
    pub fn validate(&self) -> Result<()> {
        let g = self.geometry()?;
        if self.n_r == 0 {
            return Err(Error::Config("N_r must be positive".into()));
        }
        let profile = self.channel_profile()?;
        g.check_channel_len(profile.len())?;
        if self.n_uw > g.k {
            return Err(Error::Config(format!(
                "N_UW = {} exceeds the sub-block length K = {}",
                self.n_uw, g.k
            )));
        }
        self.info_len()?;
        if self.n_iter == 0 {
            return Err(Error::Config("n_iter must be at least 1".into()));
        }
        if !(self.snr_step_db > 0.0) || self.snr_stop_db < self.snr_start_db {
            return Err(Error::Config(format!(
                "SNR grid {}..{} step {} is empty",
                self.snr_start_db, self.snr_stop_db, self.snr_step_db
            )));
        }
        if self.max_frames == 0 || self.min_frame_errors == 0 {
            return Err(Error::Config("max_frames and min_frame_errors must be positive".into()));
        }
        if self.candidate_m.is_empty() {
            return Err(Error::Config("candidate_m is empty".into()));
        }
        Ok(())
    }

    /// Inclusive SNR grid in dB.
    pub fn snr_points(&self) -> Vec<f64> {
        let count = ((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let v = self.snr_start_db + i as f64 * self.snr_step_db;
                (v * 1e9).round() / 1e9
            })
            .collect()
    }

    /// Per-receive-antenna noise variance at `E_b / sigma^2 = snr_db` with
    /// unit symbol energy. With `charge_overhead` the UW and prefix energy is
    /// counted against the information bits.
    pub fn noise_var(&self, snr_db: f64) -> Result<f64> {
        let bits = self.code_rate.value() * self.modulation.bits_per_symbol() as f64;
        let mut eb = 1.0 / bits;
        if self.charge_overhead {
            let g = self.geometry()?;
            eb *= g.frame_len() as f64 / g.n as f64;
        }
        Ok(eb / 10f64.powf(snr_db / 10.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = SimConfig::default();
        c.validate().unwrap();
        let back = SimConfig::parse_str(&c.to_config_string()).unwrap();
        assert_eq!(back, c);
        for key in SimConfig::KEYS {
            let known = c.to_config_string().contains(&format!("{key} =")) || key == "antennas";
            assert!(known, "{key}");
        }
    }

    #[test]
    fn parses_and_overrides() {
        let c = SimConfig::parse_str("# comment\nwaveform = ofdm\nantennas = 4x4\nn_uw = 64 # trailing\ncode_rate=1/2\nmodulation = QPSK\ndoppler_hz = 0\nmax_frames = 1e4\n").unwrap();
        assert_eq!(c.waveform, WaveformKind::Ofdm);
        assert_eq!((c.n_t, c.n_r, c.n_uw), (4, 4, 64));
        assert_eq!(c.code_rate, CodeRate::Half);
        assert_eq!(c.modulation, Modulation::Qpsk);
        assert_eq!(c.doppler(), 0.0);
        assert_eq!(c.max_frames, 10_000);
        c.validate().unwrap();
        assert_eq!(c.info_len().unwrap(), 282);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimConfig::parse_str("bogus = 1").is_err());
        assert!(SimConfig::parse_str("n_t").is_err());
        assert!(SimConfig::parse_str("m = four").is_err());
        let c = SimConfig::parse_str("n_t = 4").unwrap();
        assert!(c.validate().is_err()); // 32/4 < 12
        let e = SimConfig::load(Path::new("/definitely/missing.cfg")).unwrap_err();
        assert!(e.to_string().contains("/definitely/missing.cfg"));
    }

    #[test]
    fn payload_sizes() {
        let mut c = SimConfig::default();
        for (rate, m, want) in [
            (CodeRate::Half, Modulation::Qpsk, 282),
            (CodeRate::Half, Modulation::Qam16, 570),
            (CodeRate::ThreeQuarters, Modulation::Qam16, 858),
            (CodeRate::ThreeQuarters, Modulation::Qam64, 1290),
        ] {
            c.code_rate = rate;
            c.modulation = m;
            assert_eq!(c.info_len().unwrap(), want);
        }
    }

    #[test]
    fn snr_grid_and_noise() {
        let mut c = SimConfig::default();
        c.snr_start_db = 4.0;
        c.snr_stop_db = 10.0;
        c.snr_step_db = 1.5;
        assert_eq!(c.snr_points(), vec![4.0, 5.5, 7.0, 8.5, 10.0]);
        c.modulation = Modulation::Qpsk;
        c.code_rate = CodeRate::Half;
        assert!((c.noise_var(0.0).unwrap() - 1.0).abs() < 1e-12);
        c.charge_overhead = true;
        assert!((c.noise_var(0.0).unwrap() - 448.0 / 288.0).abs() < 1e-12);
    }

    #[test]
    fn reference_doppler() {
        let d = SimConfig::default().doppler();
        assert!((d - 1913.36).abs() < 0.01);
    }
}
