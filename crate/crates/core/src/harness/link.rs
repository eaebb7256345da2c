//! One end-to-end frame: encode, modulate, fade, estimate, detect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EstimationMode, SimConfig};
use crate::bicm::{encode, CodeConfig, Constellation, Interleaver};
use crate::channel::{generate_realization, propagate_with_rng, ChannelProfile, ChannelRealization};
use crate::dsp::C64;
use crate::error::Result;
use crate::estimation::{ChannelEstimate, ChannelEstimator};
use crate::receiver::{fd_demux, Detector};
use crate::waveform::{build_frame, zadoff_chu, FrameGeometry, Modulator, TxFrame};

/// Result of one simulated frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bit_errors: u64,
    pub frame_error: bool,
    /// Frame error after every decoder call.
    pub iteration_errors: Vec<bool>,
}

/// Everything that stays fixed across frames at one noise level.
#[derive(Debug, Clone)]
pub struct Link {
    geom: FrameGeometry,
    profile: ChannelProfile,
    modulator: Modulator,
    constellation: Constellation,
    code: CodeConfig,
    interleaver: Interleaver,
    detector: Detector,
    estimator: ChannelEstimator,
    estimation: EstimationMode,
    uw: Vec<C64>,
    n_r: usize,
    info_len: usize,
    noise_var: f64,
}

impl Link {
    pub fn new(cfg: &SimConfig, noise_var: f64) -> Result<Self> {
        cfg.validate()?;
        let geom = cfg.geometry()?;
        let profile = cfg.channel_profile()?;
        let constellation = cfg.constellation();
        let code = cfg.code();
        let interleaver = Interleaver::new(cfg.coded_len(), cfg.interleaver_seed);
        let detector = Detector::new(&geom, cfg.waveform, constellation.clone(), &code, interleaver.clone(), cfg.n_iter)?
            .with_feedback(cfg.pic_feedback);
        Ok(Self {
            modulator: Modulator::new(cfg.waveform, &geom),
            estimator: ChannelEstimator::new(&geom, &profile, noise_var)?,
            uw: zadoff_chu(geom.n_uw)?,
            info_len: cfg.info_len()?,
            estimation: cfg.estimation,
            n_r: cfg.n_r,
            geom,
            profile,
            constellation,
            code,
            interleaver,
            detector,
            noise_var,
        })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geom
    }

    pub fn info_len(&self) -> usize {
        self.info_len
    }

    pub fn decoder_calls(&self) -> usize {
        self.detector.iterations()
    }

    pub fn estimator(&self) -> &ChannelEstimator {
        &self.estimator
    }

    /// Random payload and its transmitted frame.
    pub fn transmit<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<u8>, TxFrame)> {
        let bits: Vec<u8> = (0..self.info_len).map(|_| rng.random_range(0..2u8)).collect();
        let coded = encode(&bits, &self.code)?;
        let symbols = self.constellation.map(&self.interleaver.interleave(&coded)?)?;
        let frame = build_frame(&self.geom, &self.modulator, &symbols, &self.uw)?;
        Ok((bits, frame))
    }

    pub fn draw_channel(&self, seed: u64) -> Result<ChannelRealization> {
        generate_realization(&self.profile, self.geom.frame_len(), self.geom.n_t, self.n_r, seed)
    }

    /// Receives a frame over a given channel.
    pub fn receive<R: Rng + ?Sized>(
        &self,
        frame: &TxFrame,
        chan: &ChannelRealization,
        rng: &mut R,
    ) -> Result<crate::receiver::Detection> {
        let rx = propagate_with_rng(frame, chan, self.noise_var, rng)?;
        let obs = fd_demux(&rx, &self.geom)?;
        let est = match self.estimation {
            EstimationMode::UniqueWord => self.estimator.estimate(&obs.uw)?,
            EstimationMode::Genie => ChannelEstimate::genie(chan, &self.geom, &self.profile)?,
        };
        self.detector.detect(&obs, &est, self.noise_var)
    }

    /// Simulates the frame identified by `seed`.
    pub fn run_frame(&self, seed: u64) -> Result<FrameOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bits, frame) = self.transmit(&mut rng)?;
        let chan = self.draw_channel(rng.random())?;
        let det = self.receive(&frame, &chan, &mut rng)?;
        let bit_errors = bits.iter().zip(&det.info_bits).filter(|(a, b)| a != b).count() as u64;
        let iteration_errors = det.iteration_bits.iter().map(|ib| ib != &bits).collect();
        Ok(FrameOutcome {
            bit_errors,
            frame_error: bit_errors > 0,
            iteration_errors,
        })
    }
}
