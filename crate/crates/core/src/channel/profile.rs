//! Power-delay profiles and the Jakes temporal correlation.

use crate::dsp::bessel_j0;
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Extended Vehicular A tap delays in nanoseconds.
pub const EVA_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];
/// Extended Vehicular A relative tap powers in dB.
pub const EVA_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];

/// Maximum Doppler shift `f_c v / c` in Hz.
pub fn doppler_shift(carrier_hz: f64, speed_mps: f64) -> f64 {
    carrier_hz * speed_mps / SPEED_OF_LIGHT
}

/// `J0(2 pi dn f_D / B)`.
pub fn jakes_correlation(dn: i64, doppler_hz: f64, bandwidth_hz: f64) -> f64 {
    debug_assert!(bandwidth_hz > 0.0);
    bessel_j0(2.0 * std::f64::consts::PI * dn as f64 * doppler_hz / bandwidth_hz)
}

/// Sample-spaced tapped delay line with a common Doppler spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    /// Delays (in samples) of the taps that carry power, strictly increasing.
    pub tap_delays: Vec<usize>,
    /// Power of each entry in `tap_delays`; sums to one.
    pub tap_powers: Vec<f64>,
    pub bandwidth_hz: f64,
    pub doppler_hz: f64,
}

impl ChannelProfile {
    /// Builds a profile from (delay, power) pairs, merging equal delays and
    /// normalizing to unit power. Zero-power taps are dropped.
    pub fn from_taps(taps: &[(usize, f64)], bandwidth_hz: f64, doppler_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0) {
            return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth_hz}")));
        }
        if !(doppler_hz >= 0.0) || !doppler_hz.is_finite() {
            return Err(Error::Config(format!("Doppler shift must be non-negative, got {doppler_hz}")));
        }
        let len = taps.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        let mut dense = vec![0.0; len];
        for &(d, p) in taps {
            if !(p >= 0.0) {
                return Err(Error::Config(format!("tap power must be non-negative, got {p}")));
            }
            dense[d] += p;
        }
        let total: f64 = dense.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config("profile has no power".into()));
        }
        let (tap_delays, tap_powers) = dense
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(d, &p)| (d, p / total))
            .unzip();
        Ok(Self {
            tap_delays,
            tap_powers,
            bandwidth_hz,
            doppler_hz,
        })
    }

    /// EVA binned to the sample grid of rate `bandwidth_hz` by nearest-sample
    /// rounding, with powers of colliding paths added.
    pub fn eva(bandwidth_hz: f64, doppler_hz: f64) -> Result<Self> {
        let taps: Vec<(usize, f64)> = EVA_DELAYS_NS
            .iter()
            .zip(EVA_POWERS_DB)
            .map(|(&ns, db)| ((ns * 1e-9 * bandwidth_hz).round() as usize, 10f64.powf(db / 10.0)))
            .collect();
        Self::from_taps(&taps, bandwidth_hz, doppler_hz)
    }

    /// Single unit-power tap at delay 0.
    pub fn flat(bandwidth_hz: f64, doppler_hz: f64) -> Result<Self> {
        Self::from_taps(&[(0, 1.0)], bandwidth_hz, doppler_hz)
    }

    pub fn with_doppler(mut self, doppler_hz: f64) -> Self {
        self.doppler_hz = doppler_hz;
        self
    }

    /// Channel length `L` (largest delay plus one).
    pub fn len(&self) -> usize {
        self.tap_delays.last().map_or(0, |d| d + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.tap_delays.is_empty()
    }

    /// Tap powers on the full `0..L` grid.
    pub fn dense_powers(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (&d, &p) in self.tap_delays.iter().zip(&self.tap_powers) {
            out[d] = p;
        }
        out
    }

    /// Normalized Doppler `f_D / B` (cycles per sample).
    pub fn normalized_doppler(&self) -> f64 {
        self.doppler_hz / self.bandwidth_hz
    }

    /// Temporal correlation of every tap at lag `dn` samples.
    pub fn correlation(&self, dn: i64) -> f64 {
        jakes_correlation(dn, self.doppler_hz, self.bandwidth_hz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bessel J0 by trapezoidal quadrature of `(1/pi) int_0^pi cos(x sin t) dt`.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = std::f64::consts::PI / n as f64;
        let mut acc = 0.5 * (1.0 + (x * std::f64::consts::PI.sin()).cos());
        for i in 1..n {
            acc += (x * (i as f64 * h).sin()).cos();
        }
        acc * h / std::f64::consts::PI
    }

    #[test]
    fn jakes_examples() {
        assert_eq!(jakes_correlation(0, 1920.0, 4.32e6), 1.0);
        for dn in [-50, 1, 7, 1000] {
            assert_eq!(jakes_correlation(dn, 0.0, 4.32e6), 1.0);
            assert_eq!(jakes_correlation(dn, 900.0, 4.32e6), jakes_correlation(-dn, 900.0, 4.32e6));
        }
        assert!(jakes_correlation(861, 1920.0, 4.32e6).abs() < 1e-3);
        for dn in [3, 120, 300, 861, 2000] {
            let x = 2.0 * std::f64::consts::PI * dn as f64 * 1920.0 / 4.32e6;
            assert!((jakes_correlation(dn, 1920.0, 4.32e6) - j0_quadrature(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn eva_at_reference_bandwidth() {
        let p = ChannelProfile::eva(4.32e6, 0.0).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!(p.tap_delays, vec![0, 1, 2, 3, 5, 7, 11]);
        assert!((p.tap_powers.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // 0 ns and 30 ns collide in bin 0
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let total: f64 = EVA_POWERS_DB.iter().map(|&d| lin(d)).sum();
        assert!((p.tap_powers[0] - (lin(0.0) + lin(-1.5)) / total).abs() < 1e-12);
    }

    #[test]
    fn eva_binning_any_bandwidth() {
        for b in [1.0e6, 3.84e6, 7.68e6, 15.36e6, 30.72e6] {
            let p = ChannelProfile::eva(b, 10.0).unwrap();
            assert!((p.tap_powers.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(p.tap_delays[0], 0);
            assert!(p.tap_delays.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(p.len(), (2510e-9 * b).round() as usize + 1);
        }
    }

    #[test]
    fn doppler_from_carrier_and_speed() {
        let fd = doppler_shift(5.9e9, 350.0 / 3.6);
        assert!((fd - 1913.36).abs() < 0.01, "{fd}");
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(ChannelProfile::from_taps(&[(0, 0.0)], 1.0, 0.0).is_err());
        assert!(ChannelProfile::from_taps(&[(0, 1.0)], 0.0, 0.0).is_err());
        assert!(ChannelProfile::from_taps(&[(0, 1.0)], 1.0, -1.0).is_err());
    }
}
