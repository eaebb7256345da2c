//! Frame detection: combining, equalization, demapping and decoding, with
//! soft feedback for OTFS.

use super::equalizer::{mmse_pic_equalize, mrc_combine, FdObservation};
use crate::bicm::{CodeConfig, Constellation, Interleaver, SisoDecoder, SoftSymbols};
use crate::dsp::C64;
use crate::error::{check_len, Error, Result};
use crate::estimation::ChannelEstimate;
use crate::waveform::{FrameGeometry, Modulator, WaveformKind};

/// Lower bound on the effective noise so noiseless runs stay well posed.
pub const MIN_EFFECTIVE_NOISE: f64 = 1e-10;

/// Decoder output turned into soft symbols for the next equalizer pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PicFeedback {
    /// Extrinsic coded-bit LLRs only.
    Extrinsic,
    /// Extrinsic plus the decoder input, i.e. a-posteriori coded-bit LLRs.
    Posterior,
}

impl std::fmt::Display for PicFeedback {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PicFeedback::Extrinsic => "extrinsic",
            PicFeedback::Posterior => "posterior",
        })
    }
}

impl std::str::FromStr for PicFeedback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "extrinsic" => Ok(PicFeedback::Extrinsic),
            "posterior" | "app" => Ok(PicFeedback::Posterior),
            other => Err(Error::Config(format!("unknown PIC feedback `{other}`"))),
        }
    }
}

/// Per-frame detection output.
#[derive(Debug, Clone)]
pub struct Detection {
    pub info_bits: Vec<u8>,
    /// Hard decisions after every decoder call.
    pub iteration_bits: Vec<Vec<u8>>,
    /// Mean per-bit information carried by the demapper output of every
    /// iteration, estimated from LLR magnitudes.
    pub mi_proxy: Vec<f64>,
    pub decoder_calls: usize,
}

/// `1 - E[h(1 / (1 + e^|L|))]` with `h` the binary entropy.
pub fn llr_information(llrs: &[f64]) -> f64 {
    if llrs.is_empty() {
        return 0.0;
    }
    let h: f64 = llrs
        .iter()
        .map(|l| {
            let p = 1.0 / (1.0 + l.abs().exp());
            if p <= 0.0 {
                0.0
            } else {
                -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
            }
        })
        .sum();
    1.0 - h / llrs.len() as f64
}

/// Receiver for one link configuration.
#[derive(Debug, Clone)]
pub struct Detector {
    geom: FrameGeometry,
    modulator: Modulator,
    constellation: Constellation,
    decoder: SisoDecoder,
    interleaver: Interleaver,
    n_iter: usize,
    feedback: PicFeedback,
}

impl Detector {
    pub fn new(
        geom: &FrameGeometry,
        kind: WaveformKind,
        constellation: Constellation,
        code: &CodeConfig,
        interleaver: Interleaver,
        n_iter: usize,
    ) -> Result<Self> {
        let coded = geom.n * constellation.bits_per_symbol();
        check_len("interleaver", coded, interleaver.len())?;
        code.info_len_for(coded)?;
        if n_iter == 0 {
            return Err(Error::Config("at least one detector iteration is required".into()));
        }
        Ok(Self {
            geom: *geom,
            modulator: Modulator::new(kind, geom),
            constellation,
            decoder: SisoDecoder::new(code)?,
            interleaver,
            n_iter,
            feedback: PicFeedback::Posterior,
        })
    }

    pub fn with_feedback(mut self, feedback: PicFeedback) -> Self {
        self.feedback = feedback;
        self
    }

    /// Decoder calls per frame: one for OFDM, `n_iter` for OTFS.
    pub fn iterations(&self) -> usize {
        match self.modulator.kind() {
            WaveformKind::Ofdm => 1,
            WaveformKind::Otfs => self.n_iter,
        }
    }

    pub fn detect(&self, obs: &FdObservation, est: &ChannelEstimate, noise_var: f64) -> Result<Detection> {
        let n = self.geom.n;
        let (y, gain, noise) = self.combine(obs, est, noise_var)?;

        let mut prior = SoftSymbols::uninformed(n, 1.0);
        let mut iteration_bits = Vec::new();
        let mut mi_proxy = Vec::new();
        let mut info_bits = Vec::new();
        let rounds = self.iterations();
        for it in 0..rounds {
            let eq = mmse_pic_equalize(&self.modulator, &y, &gain, &noise, &prior)?;
            let llr = self.constellation.demap(&eq.means, &eq.variances, &[])?;
            mi_proxy.push(llr_information(&llr));
            let coded = self.interleaver.deinterleave(&llr)?;
            let out = self.decoder.decode(&coded)?;
            info_bits = out.info_bits;
            iteration_bits.push(info_bits.clone());
            if it + 1 < rounds {
                let soft = match self.feedback {
                    PicFeedback::Extrinsic => out.extrinsic,
                    PicFeedback::Posterior => out.extrinsic.iter().zip(&coded).map(|(e, c)| e + c).collect(),
                };
                let fed = self.interleaver.interleave(&soft)?;
                prior = self.constellation.soft_symbols(&fed)?;
            }
        }
        Ok(Detection {
            info_bits,
            iteration_bits,
            mi_proxy,
            decoder_calls: rounds,
        })
    }

    /// Stacked MRC output, gains and effective noise of all sub-blocks.
    fn combine(&self, obs: &FdObservation, est: &ChannelEstimate, noise_var: f64) -> Result<(Vec<C64>, Vec<f64>, Vec<f64>)> {
        let g = &self.geom;
        check_len("observed sub-blocks", g.m, obs.data.len())?;
        check_len("estimated sub-blocks", g.m, est.lambda.len())?;
        check_len("error variances", g.m, est.sigma2_ce.len())?;
        let mut y = Vec::with_capacity(g.n);
        let mut gain = Vec::with_capacity(g.n);
        let mut noise = Vec::with_capacity(g.n);
        for m in 0..g.m {
            let (ym, gm) = mrc_combine(&obs.data[m], &est.lambda[m])?;
            y.extend(ym);
            gain.extend(gm);
            let v = (noise_var + est.sigma2_ce[m] + est.sigma2_d).max(MIN_EFFECTIVE_NOISE);
            noise.extend(std::iter::repeat_n(v, g.k));
        }
        Ok((y, gain, noise))
    }

    /// Unbiased equalizer output of a single pass without priors.
    pub fn equalize_once(&self, obs: &FdObservation, est: &ChannelEstimate, noise_var: f64) -> Result<Vec<C64>> {
        let (y, gain, noise) = self.combine(obs, est, noise_var)?;
        let prior = SoftSymbols::uninformed(self.geom.n, 1.0);
        Ok(mmse_pic_equalize(&self.modulator, &y, &gain, &noise, &prior)?.means)
    }
}
