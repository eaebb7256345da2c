//! The long-running campaign that reproduces every FER curve of the
//! reference scenarios.

use super::config::SimConfig;
use crate::bicm::{CodeRate, Modulation};
use crate::waveform::WaveformKind;

/// One curve of the full campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetCurve {
    /// File-name friendly label, e.g. `2x2_otfs_r34_16qam`.
    pub name: String,
    pub config: SimConfig,
}

const MCS: [(CodeRate, Modulation, &str); 4] = [
    (CodeRate::Half, Modulation::Qpsk, "r12_qpsk"),
    (CodeRate::Half, Modulation::Qam16, "r12_16qam"),
    (CodeRate::ThreeQuarters, Modulation::Qam16, "r34_16qam"),
    (CodeRate::ThreeQuarters, Modulation::Qam64, "r34_64qam"),
];

/// Antenna setups with their UW lengths: SISO and 2x2 use 32, 4x4 uses 64.
const ANTENNAS: [(usize, usize); 3] = [(1, 32), (2, 32), (4, 64)];

/// Every (antennas, MCS, waveform) combination at M = 4 with the stopping
/// rule and seeds of `base`. SNR grids span each MCS down to FER 1e-4.
pub fn full_preset(base: &SimConfig) -> Vec<PresetCurve> {
    let mut out = Vec::new();
    for (ai, &(ant, n_uw)) in ANTENNAS.iter().enumerate() {
        for (mi, &(rate, modulation, label)) in MCS.iter().enumerate() {
            for kind in [WaveformKind::Ofdm, WaveformKind::Otfs] {
                let mut c = base.clone();
                c.m = 4;
                c.n_t = ant;
                c.n_r = ant;
                c.n_uw = n_uw;
                c.code_rate = rate;
                c.modulation = modulation;
                c.waveform = kind;
                c.snr_start_db = 0.0;
                c.snr_stop_db = match modulation {
                    Modulation::Qpsk => 20.0,
                    Modulation::Qam16 => 30.0,
                    Modulation::Qam64 => 36.0,
                };
                c.snr_step_db = 2.0;
                c.seed = super::derive_seed(base.seed, (ai * 100 + mi * 10) as u64 + kind as u64);
                out.push(PresetCurve {
                    name: format!("{ant}x{ant}_{}_{label}", kind.to_string().to_lowercase()),
                    config: c,
                });
            }
        }
    }
    out
}
