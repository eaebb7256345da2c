//! Time-varying Rayleigh tap gains from a sum-of-sinusoids generator.
//!
//! Every tap of every antenna pair is an independent sum of `N_OSC` complex
//! exponentials. The arrival angle of oscillator `i` is
//! `(2 pi i + theta) / N_OSC` with one random `theta` per tap, which spreads
//! the Doppler frequencies `f_D cos(alpha_i)` evenly over the Jakes spectrum.
//! The oscillator weights are independent `CN(0, rho / N_OSC)`, so each tap
//! sample is exactly complex Gaussian and the ensemble autocorrelation is
//! exactly `rho J0(2 pi dn f_D / B)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::profile::ChannelProfile;
use crate::dsp::C64;
use crate::error::{Error, Result};

/// Oscillators per tap.
pub const N_OSC: usize = 64;

/// Gains `h[n][l]` for every (transmit, receive) antenna pair.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub n_samples: usize,
    pub n_t: usize,
    pub n_r: usize,
    /// Delays of the stored taps; all other delays are zero.
    pub tap_delays: Vec<usize>,
    /// Channel length `L`.
    pub len: usize,
    pub seed: u64,
    /// `series[(nt * n_r + nr) * taps + i][n]` is the gain of tap `tap_delays[i]`.
    series: Vec<Vec<C64>>,
}

impl ChannelRealization {
    fn index(&self, nt: usize, nr: usize, i: usize) -> usize {
        (nt * self.n_r + nr) * self.tap_delays.len() + i
    }

    /// Time series of the `i`-th stored tap of pair `(nt, nr)`.
    pub fn tap_series(&self, nt: usize, nr: usize, i: usize) -> &[C64] {
        &self.series[self.index(nt, nr, i)]
    }

    pub fn tap_series_mut(&mut self, nt: usize, nr: usize, i: usize) -> &mut [C64] {
        let idx = self.index(nt, nr, i);
        &mut self.series[idx]
    }

    /// `h[n][l]` for pair `(nt, nr)`, zero for delays without power.
    pub fn gain(&self, n: usize, l: usize, nt: usize, nr: usize) -> C64 {
        match self.tap_delays.iter().position(|&d| d == l) {
            Some(i) => self.tap_series(nt, nr, i)[n],
            None => C64::new(0.0, 0.0),
        }
    }

    /// Dense taps `h[n][0..L]` of pair `(nt, nr)` at time `n`.
    pub fn taps_at(&self, n: usize, nt: usize, nr: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.len];
        for (i, &d) in self.tap_delays.iter().enumerate() {
            out[d] = self.tap_series(nt, nr, i)[n];
        }
        out
    }

    /// Time-invariant channel with the given dense taps for every pair.
    pub fn from_static(taps: &[Vec<Vec<C64>>], n_samples: usize) -> Result<Self> {
        let n_t = taps.len();
        let n_r = taps.first().map_or(0, |t| t.len());
        if n_t == 0 || n_r == 0 || taps.iter().any(|t| t.len() != n_r) {
            return Err(Error::InvalidArgument("static taps need an N_t x N_r grid".into()));
        }
        let len = taps.iter().flatten().map(|t| t.len()).max().unwrap_or(0);
        let tap_delays: Vec<usize> = (0..len).collect();
        let mut series = Vec::with_capacity(n_t * n_r * len);
        for per_nt in taps {
            for t in per_nt {
                for d in 0..len {
                    let v = t.get(d).copied().unwrap_or_default();
                    series.push(vec![v; n_samples]);
                }
            }
        }
        Ok(Self {
            n_samples,
            n_t,
            n_r,
            tap_delays,
            len,
            seed: 0,
            series,
        })
    }
}

/// One tap process evaluated at `n = 0..n_samples`.
fn sos_tap(rng: &mut ChaCha8Rng, power: f64, nu: f64, out: &mut Vec<C64>, n_samples: usize) {
    let theta: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let sd = (power / (2.0 * N_OSC as f64)).sqrt();
    out.clear();
    out.resize(n_samples, C64::new(0.0, 0.0));
    for i in 0..N_OSC {
        let alpha = (2.0 * std::f64::consts::PI * i as f64 + theta) / N_OSC as f64;
        let w = 2.0 * std::f64::consts::PI * nu * alpha.cos();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let mut ph = C64::new(re * sd, im * sd);
        let step = C64::from_polar(1.0, w);
        for v in out.iter_mut() {
            *v += ph;
            ph *= step;
        }
    }
}

/// Draws an independent realization for every (transmit, receive) pair.
pub fn generate_realization(
    profile: &ChannelProfile,
    n_samples: usize,
    n_t: usize,
    n_r: usize,
    seed: u64,
) -> Result<ChannelRealization> {
    if n_samples == 0 || n_t == 0 || n_r == 0 {
        return Err(Error::InvalidArgument(
            "realization needs positive length and antenna counts".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu = profile.normalized_doppler();
    let taps = profile.tap_delays.len();
    let mut series = Vec::with_capacity(n_t * n_r * taps);
    for _ in 0..n_t * n_r {
        for &p in &profile.tap_powers {
            let mut s = Vec::new();
            if nu == 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                s.resize(n_samples, C64::new(re, im) * (p / 2.0).sqrt());
            } else {
                sos_tap(&mut rng, p, nu, &mut s, n_samples);
            }
            series.push(s);
        }
    }
    Ok(ChannelRealization {
        n_samples,
        n_t,
        n_r,
        tap_delays: profile.tap_delays.clone(),
        len: profile.len(),
        seed,
        series,
    })
}
