//! Square Gray-labelled QAM with unit mean symbol energy.
//!
//! Each symbol carries `2q` bits: the first `q` label the in-phase axis and
//! the last `q` the quadrature axis, most significant bit first. On each
//! axis the level with index `i` (amplitude `(P-1-2i)` before scaling, so
//! index 0 is the most positive level) carries the binary-reflected Gray
//! label `i ^ (i >> 1)`. The full per-axis tables are listed in
//! `docs/constellations.md`.

use std::fmt;
use std::str::FromStr;

use super::clamp_llr;
use crate::dsp::C64;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Qpsk => f.write_str("QPSK"),
            Modulation::Qam16 => f.write_str("16QAM"),
            Modulation::Qam64 => f.write_str("64QAM"),
        }
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            "64qam" | "qam64" => Ok(Modulation::Qam64),
            other => Err(Error::Config(format!("unsupported modulation `{other}`"))),
        }
    }
}

/// Prior-weighted symbol statistics used for interference cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSymbols {
    pub means: Vec<C64>,
    pub variances: Vec<f64>,
}

impl SoftSymbols {
    /// Zero-mean symbols with full energy, i.e. no prior knowledge.
    pub fn uninformed(len: usize, energy: f64) -> Self {
        Self {
            means: vec![C64::new(0.0, 0.0); len],
            variances: vec![energy; len],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constellation {
    modulation: Modulation,
    bits_per_axis: usize,
    /// Amplitude of the level carrying each axis label.
    axis_amp: Vec<f64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let q = modulation.bits_per_symbol() / 2;
        let levels = 1usize << q;
        let mean_axis_energy = (levels * levels - 1) as f64 / 3.0;
        let scale = 1.0 / (2.0 * mean_axis_energy).sqrt();
        let mut axis_amp = vec![0.0; levels];
        for i in 0..levels {
            let label = i ^ (i >> 1);
            axis_amp[label] = (levels as f64 - 1.0 - 2.0 * i as f64) * scale;
        }
        Self {
            modulation,
            bits_per_axis: q,
            axis_amp,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    /// Axis amplitude indexed by Gray label.
    pub fn axis_levels(&self) -> &[f64] {
        &self.axis_amp
    }

    fn label(bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    fn label_bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.bits_per_axis - 1 - j)) & 1) as u8
    }

    pub fn point(&self, bits: &[u8]) -> C64 {
        let q = self.bits_per_axis;
        C64::new(
            self.axis_amp[Self::label(&bits[..q])],
            self.axis_amp[Self::label(&bits[q..2 * q])],
        )
    }

    /// All `J` points in label order.
    pub fn points(&self) -> Vec<C64> {
        let bps = self.bits_per_symbol();
        (0..1usize << bps)
            .map(|v| {
                let bits: Vec<u8> = (0..bps).map(|j| ((v >> (bps - 1 - j)) & 1) as u8).collect();
                self.point(&bits)
            })
            .collect()
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::InvalidArgument(format!(
                "{} bits do not fill whole {}-bit symbols",
                bits.len(),
                bps
            )));
        }
        Ok(bits.chunks_exact(bps).map(|c| self.point(c)).collect())
    }

    /// Max-log extrinsic LLRs (`log P(0)/P(1)`) for symbol observations `y`
    /// with per-symbol error variance `variance` (complex, total) and bit
    /// priors `priors` (empty slice for none).
    pub fn demap(&self, y: &[C64], variance: &[f64], priors: &[f64]) -> Result<Vec<f64>> {
        check_len("demapper variances", y.len(), variance.len())?;
        let bps = self.bits_per_symbol();
        let n_bits = y.len() * bps;
        if !priors.is_empty() {
            check_len("demapper priors", n_bits, priors.len())?;
        }
        if let Some(v) = variance.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "demapper variance must be positive, got {v}"
            )));
        }
        let q = self.bits_per_axis;
        let mut out = vec![0.0; n_bits];
        let zero = vec![0.0; q];
        for (i, (&ys, &v)) in y.iter().zip(variance).enumerate() {
            for (axis, obs) in [ys.re, ys.im].into_iter().enumerate() {
                let base = i * bps + axis * q;
                let la = if priors.is_empty() {
                    &zero[..]
                } else {
                    &priors[base..base + q]
                };
                self.demap_axis(obs, v, la, &mut out[base..base + q]);
            }
        }
        Ok(out)
    }

    fn demap_axis(&self, y: f64, v: f64, la: &[f64], out: &mut [f64]) {
        let q = self.bits_per_axis;
        let levels = self.axis_amp.len();
        let mut metric = [0.0f64; 8];
        for (label, m) in metric.iter_mut().enumerate().take(levels) {
            let d = y - self.axis_amp[label];
            let mut acc = -d * d / v;
            for (j, &l) in la.iter().enumerate() {
                acc += if self.label_bit(label, j) == 0 { 0.5 * l } else { -0.5 * l };
            }
            *m = acc;
        }
        for j in 0..q {
            let mut best = [f64::NEG_INFINITY; 2];
            for (label, &m) in metric.iter().enumerate().take(levels) {
                let b = self.label_bit(label, j) as usize;
                let own = if b == 0 { 0.5 * la[j] } else { -0.5 * la[j] };
                let m = m - own;
                if m > best[b] {
                    best[b] = m;
                }
            }
            out[j] = clamp_llr(best[0] - best[1]);
        }
    }

    /// Symbol means and variances implied by independent bit priors.
    pub fn soft_symbols(&self, priors: &[f64]) -> Result<SoftSymbols> {
        let bps = self.bits_per_symbol();
        if !priors.len().is_multiple_of(bps) {
            return Err(Error::InvalidArgument(format!(
                "{} priors do not fill whole symbols",
                priors.len()
            )));
        }
        let q = self.bits_per_axis;
        let levels = self.axis_amp.len();
        let n = priors.len() / bps;
        let mut means = Vec::with_capacity(n);
        let mut variances = Vec::with_capacity(n);
        for sym in priors.chunks_exact(bps) {
            let mut mean = [0.0; 2];
            let mut var = 0.0;
            for axis in 0..2 {
                let la = &sym[axis * q..(axis + 1) * q];
                let p0: Vec<f64> = la.iter().map(|&l| 0.5 * (1.0 + (0.5 * l).tanh())).collect();
                let (mut m1, mut m2) = (0.0, 0.0);
                for label in 0..levels {
                    let p: f64 = (0..q)
                        .map(|j| if self.label_bit(label, j) == 0 { p0[j] } else { 1.0 - p0[j] })
                        .product();
                    let a = self.axis_amp[label];
                    m1 += p * a;
                    m2 += p * a * a;
                }
                mean[axis] = m1;
                var += (m2 - m1 * m1).max(0.0);
            }
            means.push(C64::new(mean[0], mean[1]));
            variances.push(var);
        }
        Ok(SoftSymbols { means, variances })
    }
}

/// Hard decisions from LLRs; zero decides 0.
pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| (l < 0.0) as u8).collect()
}
