//! Frame propagation and the equivalent single-antenna channels seen by a
//! CDD sub-block or unique word.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::fading::ChannelRealization;
use crate::dsp::{Dft, C64};
use crate::error::{check_len, Error, Result};
use crate::waveform::{FrameGeometry, TxFrame};

/// Adds `CN(0, var)` noise in place.
pub fn add_awgn<R: Rng + ?Sized>(buf: &mut [C64], var: f64, rng: &mut R) {
    if var <= 0.0 {
        return;
    }
    let sd = (var / 2.0).sqrt();
    for v in buf {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += C64::new(re * sd, im * sd);
    }
}

/// Time-varying convolution of every transmit stream with its channel, summed
/// per receive antenna, plus noise of variance `noise_var`.
pub fn propagate_with_rng<R: Rng + ?Sized>(
    frame: &TxFrame,
    chan: &ChannelRealization,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<Vec<C64>>> {
    let len = frame.geometry.frame_len();
    if chan.n_samples < len {
        return Err(Error::InvalidArgument(format!(
            "channel spans {} samples but the frame has {len}",
            chan.n_samples
        )));
    }
    check_len("channel transmit antennas", frame.antennas.len(), chan.n_t)?;
    let mut out = Vec::with_capacity(chan.n_r);
    for nr in 0..chan.n_r {
        let mut y = vec![C64::new(0.0, 0.0); len];
        for (nt, x) in frame.antennas.iter().enumerate() {
            for (i, &d) in chan.tap_delays.iter().enumerate() {
                let h = chan.tap_series(nt, nr, i);
                for n in d..len {
                    y[n] += h[n] * x[n - d];
                }
            }
        }
        add_awgn(&mut y, noise_var, rng);
        out.push(y);
    }
    Ok(out)
}

pub fn propagate(frame: &TxFrame, chan: &ChannelRealization, noise_var: f64, seed: u64) -> Result<Vec<Vec<C64>>> {
    propagate_with_rng(frame, chan, noise_var, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Time-varying circular channel `h[n][p]` on a block of `P` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    pub len: usize,
    /// Row-major `P x P`: `taps[n * P + p]`.
    pub taps: Vec<C64>,
}

impl EquivalentChannel {
    pub fn tap(&self, n: usize, p: usize) -> C64 {
        self.taps[n * self.len + p]
    }

    /// `y[n] = sum_p h[n][p] x[(n - p) mod P]`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len("block", self.len, x.len())?;
        let p_len = self.len;
        Ok((0..p_len)
            .map(|n| {
                let row = &self.taps[n * p_len..(n + 1) * p_len];
                row.iter()
                    .enumerate()
                    .filter(|(_, h)| h.re != 0.0 || h.im != 0.0)
                    .map(|(p, h)| h * x[(n + p_len - p) % p_len])
                    .sum()
            })
            .collect())
    }

    /// Taps averaged over the block.
    pub fn mean_taps(&self) -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); self.len];
        for row in self.taps.chunks_exact(self.len) {
            for (a, h) in acc.iter_mut().zip(row) {
                *a += h;
            }
        }
        let s = 1.0 / self.len as f64;
        acc.iter().map(|v| v * s).collect()
    }

    /// One-tap gains: unnormalized DFT of the block-averaged taps. This is
    /// the diagonal of [`EquivalentChannel::fd_matrix`].
    pub fn frequency_response(&self) -> Vec<C64> {
        let mut h = self.mean_taps();
        Dft::new(self.len).forward_raw(&mut h);
        h
    }

    /// Full frequency-domain channel `F H F^H` under unitary DFTs, row-major.
    pub fn fd_matrix(&self) -> Vec<C64> {
        let p_len = self.len;
        let dft = Dft::new(p_len);
        // time-domain matrix H[n][j] = h[n][(n - j) mod P]
        let mut m = vec![C64::new(0.0, 0.0); p_len * p_len];
        for n in 0..p_len {
            for p in 0..p_len {
                let h = self.tap(n, p);
                m[n * p_len + (n + p_len - p) % p_len] = h;
            }
        }
        // columns: F applied to each column
        let mut col = vec![C64::new(0.0, 0.0); p_len];
        for j in 0..p_len {
            for n in 0..p_len {
                col[n] = m[n * p_len + j];
            }
            dft.forward_unitary(&mut col);
            for n in 0..p_len {
                m[n * p_len + j] = col[n];
            }
        }
        // rows: (row F^H) = conj(F conj(row)) since F is symmetric
        for row in m.chunks_exact_mut(p_len) {
            for v in row.iter_mut() {
                *v = v.conj();
            }
            dft.forward_unitary(row);
            for v in row.iter_mut() {
                *v = v.conj();
            }
        }
        m
    }
}

/// `h_eq[n][p] = (1/sqrt(N_t)) sum_nt h^{nt,nr}[offset + n][(p - shift(nt)) mod P]`.
pub fn equivalent_siso(
    chan: &ChannelRealization,
    offset: usize,
    len: usize,
    shifts: &[usize],
    nr: usize,
) -> Result<EquivalentChannel> {
    check_len("CDD shifts", chan.n_t, shifts.len())?;
    if offset + len > chan.n_samples {
        return Err(Error::InvalidArgument(format!(
            "window {offset}..{} exceeds the channel span {}",
            offset + len,
            chan.n_samples
        )));
    }
    if chan.len > len {
        return Err(Error::InvalidArgument(format!(
            "channel length {} exceeds block length {len}",
            chan.len
        )));
    }
    let s = 1.0 / (chan.n_t as f64).sqrt();
    let mut taps = vec![C64::new(0.0, 0.0); len * len];
    for (nt, &shift) in shifts.iter().enumerate() {
        for (i, &d) in chan.tap_delays.iter().enumerate() {
            let series = chan.tap_series(nt, nr, i);
            let p = (d + shift) % len;
            for n in 0..len {
                taps[n * len + p] += series[offset + n] * s;
            }
        }
    }
    Ok(EquivalentChannel { len, taps })
}

/// Equivalent channel of data sub-block `m` at receive antenna `nr`.
pub fn equivalent_block_channel(
    chan: &ChannelRealization,
    geom: &FrameGeometry,
    m: usize,
    nr: usize,
) -> Result<EquivalentChannel> {
    if m >= geom.m {
        return Err(Error::InvalidArgument(format!("sub-block {m} out of range")));
    }
    let shifts: Vec<usize> = (0..geom.n_t).map(|nt| geom.data_shift(nt)).collect();
    equivalent_siso(chan, geom.block_offset(m), geom.k, &shifts, nr)
}

/// Equivalent channel of unique word `u` at receive antenna `nr`.
pub fn equivalent_uw_channel(
    chan: &ChannelRealization,
    geom: &FrameGeometry,
    u: usize,
    nr: usize,
) -> Result<EquivalentChannel> {
    if u > 1 {
        return Err(Error::InvalidArgument(format!("unique word {u} out of range")));
    }
    let shifts: Vec<usize> = (0..geom.n_t).map(|nt| geom.uw_shift(nt)).collect();
    equivalent_siso(chan, geom.uw_offset(u), geom.n_uw, &shifts, nr)
}
