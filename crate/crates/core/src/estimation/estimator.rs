//! Per-frame estimation from the two unique words: least squares,
//! separation of the transmit antennas, interpolation and reconstruction of
//! the composite CDD channel of every sub-block.

use super::analytic::{doppler_error_variance, wiener_coeffs};
use crate::channel::{equivalent_block_channel, ChannelProfile, ChannelRealization};
use crate::dsp::{Dft, C64};
use crate::error::{check_len, Error, Result};
use crate::waveform::{zadoff_chu, FrameGeometry};

/// Unnormalized DFT of the unique word.
pub fn uw_reference(n_uw: usize) -> Result<Vec<C64>> {
    let mut x = zadoff_chu(n_uw)?;
    Dft::new(n_uw).forward_raw(&mut x);
    Ok(x)
}

/// Element-wise `Y / X`.
pub fn ls_estimate(y_uw: &[C64], x_uw: &[C64]) -> Result<Vec<C64>> {
    check_len("UW observation", x_uw.len(), y_uw.len())?;
    y_uw.iter()
        .zip(x_uw)
        .map(|(y, x)| {
            if x.norm_sqr() == 0.0 {
                Err(Error::InvalidArgument("UW reference has an empty bin".into()))
            } else {
                Ok(y / x)
            }
        })
        .collect()
}

/// Time-domain taps from an LS estimate (unitary inverse DFT).
pub fn uw_impulse_response(ls: &[C64]) -> Vec<C64> {
    let mut h = ls.to_vec();
    Dft::new(h.len()).inverse_unitary(&mut h);
    h
}

/// Gates the window `[nt G, (nt+1) G)` with `G = N_UW / N_t` for every
/// antenna, zero-pads to `k` and returns the `k`-point spectra.
pub fn split_per_antenna(h_uw: &[C64], n_t: usize, k: usize) -> Result<Vec<Vec<C64>>> {
    let n_uw = h_uw.len();
    if n_t == 0 || !n_uw.is_multiple_of(n_t) {
        return Err(Error::Config(format!("N_UW = {n_uw} is not a multiple of N_t = {n_t}")));
    }
    let g = n_uw / n_t;
    if g > k {
        return Err(Error::Config(format!("per-antenna window {g} exceeds K = {k}")));
    }
    let dft = Dft::new(k);
    Ok((0..n_t)
        .map(|nt| {
            let mut v = vec![C64::new(0.0, 0.0); k];
            v[..g].copy_from_slice(&h_uw[nt * g..(nt + 1) * g]);
            dft.forward_raw(&mut v);
            v
        })
        .collect())
}

/// `c[0] a + c[1] b` bin by bin.
pub fn interpolate(uw0: &[C64], uw1: &[C64], c: [f64; 2]) -> Result<Vec<C64>> {
    check_len("second UW estimate", uw0.len(), uw1.len())?;
    Ok(uw0.iter().zip(uw1).map(|(a, b)| a * c[0] + b * c[1]).collect())
}

/// Composite CDD channel spectrum from per-antenna spectra: truncate each to
/// `n_uw / N_t` taps, delay by `nt K / N_t` and transform back.
pub fn reconstruct_miso(per_antenna: &[Vec<C64>], n_uw: usize) -> Result<Vec<C64>> {
    let n_t = per_antenna.len();
    if n_t == 0 || !n_uw.is_multiple_of(n_t) {
        return Err(Error::Config(format!("N_UW = {n_uw} is not a multiple of N_t = {n_t}")));
    }
    let k = per_antenna[0].len();
    if !k.is_multiple_of(n_t) || n_uw / n_t > k / n_t {
        return Err(Error::Config(format!(
            "cannot place {} taps per antenna in K = {k}",
            n_uw / n_t
        )));
    }
    let g = n_uw / n_t;
    let dft = Dft::new(k);
    let mut taps = vec![C64::new(0.0, 0.0); k];
    for (nt, spec) in per_antenna.iter().enumerate() {
        check_len("per-antenna spectrum", k, spec.len())?;
        let mut h = spec.clone();
        dft.inverse_normalized(&mut h);
        let at = nt * k / n_t;
        for (t, v) in taps[at..at + g].iter_mut().zip(&h[..g]) {
            *t += v;
        }
    }
    dft.forward_raw(&mut taps);
    Ok(taps)
}

/// Channel knowledge handed to the detector.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// `lambda[m][nr]`: K one-tap gains of the composite channel.
    pub lambda: Vec<Vec<Vec<C64>>>,
    /// `uw_per_antenna[u][nr][nt]`: K-point spectra separated from UW `u`.
    pub uw_per_antenna: Vec<Vec<Vec<Vec<C64>>>>,
    /// Predicted composite estimation error per sub-block.
    pub sigma2_ce: Vec<f64>,
    /// Inter-carrier interference power.
    pub sigma2_d: f64,
}

impl ChannelEstimate {
    /// Block-averaged true channel with zero estimation error.
    pub fn genie(chan: &ChannelRealization, geom: &FrameGeometry, profile: &ChannelProfile) -> Result<Self> {
        let mut lambda = Vec::with_capacity(geom.m);
        for m in 0..geom.m {
            let per: Result<Vec<_>> = (0..chan.n_r)
                .map(|nr| Ok(equivalent_block_channel(chan, geom, m, nr)?.frequency_response()))
                .collect();
            lambda.push(per?);
        }
        Ok(Self {
            lambda,
            uw_per_antenna: Vec::new(),
            sigma2_ce: vec![0.0; geom.m],
            sigma2_d: doppler_error_variance(geom.k, profile),
        })
    }
}

/// Frame-independent estimation state for one configuration and noise level.
#[derive(Debug, Clone)]
pub struct ChannelEstimator {
    geom: FrameGeometry,
    x_uw: Vec<C64>,
    coeffs: Vec<[f64; 2]>,
    sigma2_ce: Vec<f64>,
    sigma2_d: f64,
    dft_uw: Dft,
    dft_k: Dft,
}

impl ChannelEstimator {
    pub fn new(geom: &FrameGeometry, profile: &ChannelProfile, noise_var: f64) -> Result<Self> {
        geom.check_channel_len(profile.len())?;
        if geom.n_uw > geom.k {
            return Err(Error::Config(format!(
                "N_UW = {} exceeds K = {}; per-antenna taps cannot be placed",
                geom.n_uw, geom.k
            )));
        }
        let mut coeffs = Vec::with_capacity(geom.m);
        let mut sigma2_ce = Vec::with_capacity(geom.m);
        for m in 0..geom.m {
            let w = wiener_coeffs(m, geom, profile, noise_var)?;
            coeffs.push(w.coeffs);
            sigma2_ce.push(w.sigma2_ce);
        }
        Ok(Self {
            geom: *geom,
            x_uw: uw_reference(geom.n_uw)?,
            coeffs,
            sigma2_ce,
            sigma2_d: doppler_error_variance(geom.k, profile),
            dft_uw: Dft::new(geom.n_uw),
            dft_k: Dft::new(geom.k),
        })
    }

    pub fn coefficients(&self) -> &[[f64; 2]] {
        &self.coeffs
    }

    pub fn sigma2_ce(&self) -> &[f64] {
        &self.sigma2_ce
    }

    pub fn sigma2_d(&self) -> f64 {
        self.sigma2_d
    }

    /// Estimates every sub-block from `y_uw[u][nr]`, the unitary spectra of
    /// the received unique words.
    pub fn estimate(&self, y_uw: &[Vec<Vec<C64>>]) -> Result<ChannelEstimate> {
        let g = &self.geom;
        check_len("unique words", 2, y_uw.len())?;
        let n_r = y_uw[0].len();
        check_len("UW receive antennas", n_r, y_uw[1].len())?;
        let gate = g.uw_gate_len();
        // gated composite taps per (u, nr); separation and reconstruction are
        // linear, so interpolation runs directly on the tap windows
        let mut taps = vec![vec![Vec::new(); n_r]; 2];
        let mut uw_per_antenna = vec![vec![Vec::new(); n_r]; 2];
        for u in 0..2 {
            for nr in 0..n_r {
                check_len("UW spectrum", g.n_uw, y_uw[u][nr].len())?;
                let mut h = ls_estimate(&y_uw[u][nr], &self.x_uw)?;
                self.dft_uw.inverse_unitary(&mut h);
                uw_per_antenna[u][nr] = (0..g.n_t)
                    .map(|nt| {
                        let mut v = vec![C64::new(0.0, 0.0); g.k];
                        v[..gate].copy_from_slice(&h[nt * gate..(nt + 1) * gate]);
                        self.dft_k.forward_raw(&mut v);
                        v
                    })
                    .collect();
                taps[u][nr] = h;
            }
        }
        let mut lambda = Vec::with_capacity(g.m);
        for (m, c) in self.coeffs.iter().enumerate() {
            let mut per_nr = Vec::with_capacity(n_r);
            for nr in 0..n_r {
                let mut v = vec![C64::new(0.0, 0.0); g.k];
                for nt in 0..g.n_t {
                    let at = g.data_shift(nt);
                    for i in 0..gate {
                        let s = nt * gate + i;
                        v[at + i] = taps[0][nr][s] * c[0] + taps[1][nr][s] * c[1];
                    }
                }
                self.dft_k.forward_raw(&mut v);
                per_nr.push(v);
            }
            debug_assert!(m < g.m);
            lambda.push(per_nr);
        }
        Ok(ChannelEstimate {
            lambda,
            uw_per_antenna,
            sigma2_ce: self.sigma2_ce.clone(),
            sigma2_d: self.sigma2_d,
        })
    }
}
