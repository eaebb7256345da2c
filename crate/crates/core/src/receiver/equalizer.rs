//! Frequency-domain front end, receive combining and the MMSE-PIC equalizer.

use crate::bicm::SoftSymbols;
use crate::dsp::{Dft, C64};
use crate::error::{check_len, Error, Result};
use crate::waveform::{FrameGeometry, Modulator, WaveformKind};

/// Smallest prior variance the equalizer works with.
const MIN_PRIOR_VAR: f64 = 1e-6;
/// Variance reported for symbols whose bins carry no signal.
pub const ERASED_VAR: f64 = 1e12;

/// Unitary spectra of every prefix-free segment of a received frame.
#[derive(Debug, Clone)]
pub struct FdObservation {
    /// `data[m][nr]`: K bins of sub-block `m`.
    pub data: Vec<Vec<Vec<C64>>>,
    /// `uw[u][nr]`: N_UW bins of unique word `u`.
    pub uw: Vec<Vec<Vec<C64>>>,
}

pub fn fd_demux(rx: &[Vec<C64>], geom: &FrameGeometry) -> Result<FdObservation> {
    let dft_k = Dft::new(geom.k);
    let dft_uw = Dft::new(geom.n_uw);
    for y in rx {
        check_len("received frame", geom.frame_len(), y.len())?;
    }
    let cut = |y: &[C64], off: usize, dft: &Dft| {
        let mut v = y[off..off + dft.len()].to_vec();
        dft.forward_unitary(&mut v);
        v
    };
    let data = (0..geom.m)
        .map(|m| rx.iter().map(|y| cut(y, geom.block_offset(m), &dft_k)).collect())
        .collect();
    let uw = (0..2)
        .map(|u| rx.iter().map(|y| cut(y, geom.uw_offset(u), &dft_uw)).collect())
        .collect();
    Ok(FdObservation { data, uw })
}

/// Maximum ratio combining per bin. Returns the combined observation and the
/// real, non-negative combined gain; bins with no gain on any antenna come
/// back as zero observation with zero gain.
pub fn mrc_combine(y: &[Vec<C64>], lambda: &[Vec<C64>]) -> Result<(Vec<C64>, Vec<f64>)> {
    check_len("receive antennas", y.len(), lambda.len())?;
    let k = y.first().map_or(0, |v| v.len());
    for (yy, ll) in y.iter().zip(lambda) {
        check_len("observation bins", k, yy.len())?;
        check_len("channel bins", k, ll.len())?;
    }
    let mut out = vec![C64::new(0.0, 0.0); k];
    let mut gain = vec![0.0; k];
    for b in 0..k {
        let p: f64 = lambda.iter().map(|l| l[b].norm_sqr()).sum();
        if p == 0.0 {
            continue;
        }
        let g = p.sqrt();
        let acc: C64 = y.iter().zip(lambda).map(|(yy, ll)| ll[b].conj() * yy[b]).sum();
        out[b] = acc / g;
        gain[b] = g;
    }
    Ok((out, gain))
}

#[derive(Debug, Clone)]
pub struct EqualizerOutput {
    /// Biased MMSE estimates.
    pub mmse: Vec<C64>,
    /// Unbiased estimates `mmse / mu`.
    pub means: Vec<C64>,
    /// Error variance of the unbiased estimates.
    pub variances: Vec<f64>,
}

/// One MMSE-PIC pass over all `N` bins.
///
/// `y`, `gain` and `noise` are indexed like the stacked spectra
/// `[X_0; ...; X_{M-1}]`. Interference from the prior means is cancelled,
/// every bin is filtered with `v g / (v g^2 + noise)` where `v` is the prior
/// variance seen by that bin, and the result is mapped back to symbols.
pub fn mmse_pic_equalize(
    modulator: &Modulator,
    y: &[C64],
    gain: &[f64],
    noise: &[f64],
    prior: &SoftSymbols,
) -> Result<EqualizerOutput> {
    let n = modulator.len();
    check_len("equalizer observation", n, y.len())?;
    check_len("equalizer gains", n, gain.len())?;
    check_len("equalizer noise", n, noise.len())?;
    check_len("prior means", n, prior.means.len())?;
    check_len("prior variances", n, prior.variances.len())?;
    if let Some(v) = noise.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidArgument(format!("effective noise must be positive, got {v}")));
    }
    let otfs = modulator.kind() == WaveformKind::Otfs;
    let v_bar = (prior.variances.iter().sum::<f64>() / n as f64).max(MIN_PRIOR_VAR);
    let xbar = modulator.spread_fd(&prior.means)?;
    let mut fg = vec![0.0; n];
    let mut r = vec![C64::new(0.0, 0.0); n];
    for b in 0..n {
        let v = if otfs { v_bar } else { prior.variances[b].max(MIN_PRIOR_VAR) };
        let f = v * gain[b] / (v * gain[b] * gain[b] + noise[b]);
        fg[b] = f * gain[b];
        r[b] = (y[b] - xbar[b] * gain[b]) * f;
    }
    let mut z = modulator.despread_fd(&r)?;
    let mu: Vec<f64> = if otfs {
        vec![fg.iter().sum::<f64>() / n as f64; n]
    } else {
        fg
    };
    let mut means = vec![C64::new(0.0, 0.0); n];
    let mut variances = vec![ERASED_VAR; n];
    for i in 0..n {
        z[i] += prior.means[i] * mu[i];
        if mu[i] > 1e-12 {
            let v = if otfs { v_bar } else { prior.variances[i].max(MIN_PRIOR_VAR) };
            means[i] = z[i] / mu[i];
            variances[i] = (v * (1.0 - mu[i]) / mu[i]).max(1e-300);
        }
    }
    Ok(EqualizerOutput {
        mmse: z,
        means,
        variances,
    })
}
