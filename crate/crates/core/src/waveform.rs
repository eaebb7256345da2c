//! Transmit waveform: OFDM/OTFS modulation, cyclic delay diversity, cyclic
//! prefixes, the Zadoff-Chu unique word and frame assembly.
//!
//! Frame layout per transmit antenna:
//!
//! ```text
//! [CP|UW] [CP|block 0] ... [CP|block M-1] [CP|UW]
//! ```
//!
//! Sample 0 is the first sample of the leading UW's prefix.
//!
//! Both waveforms are described by the unitary map from data symbols to the
//! per-sub-block frequency-domain samples `X_m` that the one-tap equalizer
//! sees. OFDM uses the identity (`X_m = d_m`); OTFS uses `F_M (x) F_K`, i.e. a
//! K-point DFT inside every sub-block followed by an M-point DFT across
//! sub-blocks. The time-domain block is always `x_m = F_K^H X_m`.

use std::fmt;
use std::str::FromStr;

use crate::dsp::{circular_delay, scale, Dft, C64};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGeometry {
    /// Data samples per frame.
    pub n: usize,
    /// Number of sub-blocks.
    pub m: usize,
    /// Sub-block length.
    pub k: usize,
    pub n_cp: usize,
    pub n_uw: usize,
    pub n_t: usize,
}

impl FrameGeometry {
    pub fn new(n: usize, m: usize, n_cp: usize, n_uw: usize, n_t: usize) -> Result<Self> {
        if n == 0 || m == 0 || n_uw == 0 || n_t == 0 {
            return Err(Error::Config(
                "N, M, N_UW and N_t must all be positive".into(),
            ));
        }
        if !n.is_multiple_of(m) {
            return Err(Error::Config(format!("M = {m} does not divide N = {n}")));
        }
        let k = n / m;
        if !k.is_multiple_of(n_t) {
            return Err(Error::Config(format!(
                "sub-block length K = {k} is not a multiple of N_t = {n_t}"
            )));
        }
        if !n_uw.is_multiple_of(n_t) {
            return Err(Error::Config(format!(
                "N_UW = {n_uw} is not a multiple of N_t = {n_t}"
            )));
        }
        if n_cp >= k || n_cp >= n_uw {
            return Err(Error::Config(format!(
                "N_CP = {n_cp} must be shorter than both K = {k} and N_UW = {n_uw}"
            )));
        }
        Ok(Self {
            n,
            m,
            k,
            n_cp,
            n_uw,
            n_t,
        })
    }

    /// Checks that a channel of `l` taps fits both the prefix and the
    /// per-antenna UW window.
    pub fn check_channel_len(&self, l: usize) -> Result<()> {
        if l > self.n_cp + 1 {
            return Err(Error::Config(format!(
                "channel length L = {l} exceeds N_CP + 1 = {}",
                self.n_cp + 1
            )));
        }
        if self.uw_gate_len() < l {
            return Err(Error::Config(format!(
                "N_UW/N_t = {} is shorter than the channel length L = {l}",
                self.uw_gate_len()
            )));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        2 * (self.n_uw + self.n_cp) + self.m * (self.k + self.n_cp)
    }

    /// First (post-prefix) sample of data sub-block `m`.
    pub fn block_offset(&self, m: usize) -> usize {
        2 * self.n_cp + self.n_uw + m * (self.n_cp + self.k)
    }

    /// First (post-prefix) sample of unique word `u` (0 or 1).
    pub fn uw_offset(&self, u: usize) -> usize {
        self.n_cp + u * (self.n_uw + self.n_cp + self.m * (self.k + self.n_cp))
    }

    /// CDD delay of antenna `nt` on a data sub-block.
    pub fn data_shift(&self, nt: usize) -> usize {
        nt * self.k / self.n_t
    }

    /// CDD delay of antenna `nt` on the unique word.
    pub fn uw_shift(&self, nt: usize) -> usize {
        nt * self.n_uw / self.n_t
    }

    /// Taps per antenna that can be separated from one UW observation.
    pub fn uw_gate_len(&self) -> usize {
        self.n_uw / self.n_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveformKind {
    Ofdm,
    Otfs,
}

impl fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaveformKind::Ofdm => "OFDM",
            WaveformKind::Otfs => "OTFS",
        })
    }
}

impl FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ofdm" => Ok(WaveformKind::Ofdm),
            "otfs" => Ok(WaveformKind::Otfs),
            other => Err(Error::Config(format!("unknown waveform `{other}`"))),
        }
    }
}

/// Applies the waveform's modulation matrix with factored transforms.
#[derive(Debug, Clone)]
pub struct Modulator {
    kind: WaveformKind,
    m: usize,
    k: usize,
    dft_k: Dft,
    dft_m: Dft,
}

impl Modulator {
    pub fn new(kind: WaveformKind, geom: &FrameGeometry) -> Self {
        Self {
            kind,
            m: geom.m,
            k: geom.k,
            dft_k: Dft::new(geom.k),
            dft_m: Dft::new(geom.m),
        }
    }

    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.m * self.k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn across_blocks(&self, buf: &mut [C64], forward: bool) {
        if self.m == 1 {
            return;
        }
        let mut col = vec![C64::new(0.0, 0.0); self.m];
        for k in 0..self.k {
            for (m, c) in col.iter_mut().enumerate() {
                *c = buf[m * self.k + k];
            }
            if forward {
                self.dft_m.forward_unitary(&mut col);
            } else {
                self.dft_m.inverse_unitary(&mut col);
            }
            for (m, c) in col.iter().enumerate() {
                buf[m * self.k + k] = *c;
            }
        }
    }

    /// Data symbols to stacked frequency-domain sub-blocks `[X_0; ...; X_{M-1}]`.
    pub fn spread_fd(&self, d: &[C64]) -> Result<Vec<C64>> {
        check_len("data symbols", self.len(), d.len())?;
        let mut buf = d.to_vec();
        if self.kind == WaveformKind::Otfs {
            for block in buf.chunks_exact_mut(self.k) {
                self.dft_k.forward_unitary(block);
            }
            self.across_blocks(&mut buf, true);
        }
        Ok(buf)
    }

    /// Adjoint (and inverse) of [`Modulator::spread_fd`].
    pub fn despread_fd(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len("frequency-domain samples", self.len(), x.len())?;
        let mut buf = x.to_vec();
        if self.kind == WaveformKind::Otfs {
            self.across_blocks(&mut buf, false);
            for block in buf.chunks_exact_mut(self.k) {
                self.dft_k.inverse_unitary(block);
            }
        }
        Ok(buf)
    }

    /// Data symbols to stacked time-domain sub-blocks (without prefixes).
    pub fn modulate(&self, d: &[C64]) -> Result<Vec<C64>> {
        let mut x = self.spread_fd(d)?;
        for block in x.chunks_exact_mut(self.k) {
            self.dft_k.inverse_unitary(block);
        }
        Ok(x)
    }

    pub fn demodulate(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len("time-domain samples", self.len(), x.len())?;
        let mut buf = x.to_vec();
        for block in buf.chunks_exact_mut(self.k) {
            self.dft_k.forward_unitary(block);
        }
        self.despread_fd(&buf)
    }
}

/// Per-antenna CDD copy: `(1/sqrt(N_t))` times `x` circularly delayed by
/// `nt * P / N_t` samples.
pub fn cdd_spread(x: &[C64], nt: usize, n_t: usize) -> Result<Vec<C64>> {
    let p = x.len();
    if n_t == 0 || !p.is_multiple_of(n_t) {
        return Err(Error::Config(format!(
            "block length {p} is not a multiple of N_t = {n_t}"
        )));
    }
    if nt >= n_t {
        return Err(Error::InvalidArgument(format!(
            "antenna index {nt} out of range for N_t = {n_t}"
        )));
    }
    let mut out = circular_delay(x, nt * p / n_t);
    scale(&mut out, 1.0 / (n_t as f64).sqrt());
    Ok(out)
}

pub fn add_cp(block: &[C64], n_cp: usize) -> Vec<C64> {
    assert!(n_cp <= block.len(), "prefix longer than block");
    let mut out = Vec::with_capacity(block.len() + n_cp);
    out.extend_from_slice(&block[block.len() - n_cp..]);
    out.extend_from_slice(block);
    out
}

pub fn strip_cp(block: &[C64], n_cp: usize) -> Result<Vec<C64>> {
    if n_cp > block.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot strip {n_cp} prefix samples from a block of {}",
            block.len()
        )));
    }
    Ok(block[n_cp..].to_vec())
}

/// Even-length Zadoff-Chu sequence `exp(j pi n^2 / len)`.
pub fn zadoff_chu(len: usize) -> Result<Vec<C64>> {
    if len == 0 || !len.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "unique word length must be even and positive, got {len}"
        )));
    }
    Ok((0..len)
        .map(|n| {
            // reduce n^2 mod 2*len first to keep the phase argument small
            let r = (n * n) % (2 * len);
            C64::from_polar(1.0, std::f64::consts::PI * r as f64 / len as f64)
        })
        .collect())
}

/// Time-domain samples of one frame for every transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub geometry: FrameGeometry,
    /// `antennas[nt]` holds `frame_len()` samples.
    pub antennas: Vec<Vec<C64>>,
}

impl TxFrame {
    pub fn samples(&self, nt: usize) -> &[C64] {
        &self.antennas[nt]
    }

    /// Data sub-block `m` of antenna `nt`, prefix removed.
    pub fn block(&self, nt: usize, m: usize) -> &[C64] {
        let off = self.geometry.block_offset(m);
        &self.antennas[nt][off..off + self.geometry.k]
    }

    /// Unique word `u` of antenna `nt`, prefix removed.
    pub fn uw(&self, nt: usize, u: usize) -> &[C64] {
        let off = self.geometry.uw_offset(u);
        &self.antennas[nt][off..off + self.geometry.n_uw]
    }
}

/// Lays out prefixed UWs and data sub-blocks.
///
/// `blocks[nt][m]` and `uw[nt]` are the per-antenna (already CDD-spread)
/// sequences without prefixes.
pub fn assemble_frame(geom: &FrameGeometry, blocks: &[Vec<Vec<C64>>], uw: &[Vec<C64>]) -> Result<TxFrame> {
    check_len("antenna block sets", geom.n_t, blocks.len())?;
    check_len("antenna unique words", geom.n_t, uw.len())?;
    let mut antennas = Vec::with_capacity(geom.n_t);
    for (nt_blocks, nt_uw) in blocks.iter().zip(uw) {
        check_len("sub-blocks", geom.m, nt_blocks.len())?;
        check_len("unique word", geom.n_uw, nt_uw.len())?;
        let uw_cp = add_cp(nt_uw, geom.n_cp);
        let mut s = Vec::with_capacity(geom.frame_len());
        s.extend_from_slice(&uw_cp);
        for b in nt_blocks {
            check_len("sub-block", geom.k, b.len())?;
            s.extend(add_cp(b, geom.n_cp));
        }
        s.extend_from_slice(&uw_cp);
        debug_assert_eq!(s.len(), geom.frame_len());
        antennas.push(s);
    }
    Ok(TxFrame {
        geometry: *geom,
        antennas,
    })
}

/// Modulates `d`, applies CDD to data and UW, and assembles the frame.
pub fn build_frame(geom: &FrameGeometry, modulator: &Modulator, d: &[C64], uw: &[C64]) -> Result<TxFrame> {
    let x = modulator.modulate(d)?;
    let mut blocks = Vec::with_capacity(geom.n_t);
    let mut uws = Vec::with_capacity(geom.n_t);
    for nt in 0..geom.n_t {
        let per: Result<Vec<_>> = x
            .chunks_exact(geom.k)
            .map(|b| cdd_spread(b, nt, geom.n_t))
            .collect();
        blocks.push(per?);
        uws.push(cdd_spread(uw, nt, geom.n_t)?);
    }
    assemble_frame(geom, &blocks, &uws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn reference(n_t: usize) -> FrameGeometry {
        FrameGeometry::new(288, 4, 16, 32, n_t).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    fn naive_dft(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| v * C64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn geometry_lengths_and_offsets() {
        let g = reference(2);
        assert_eq!(g.k, 72);
        assert_eq!(g.frame_len(), 448);
        assert_eq!(g.block_offset(0), 64);
        assert_eq!(g.uw_offset(0), 16);
        assert_eq!(g.uw_offset(1), 416);
        assert_eq!(g.data_shift(1), 36);
        assert_eq!(g.uw_shift(1), 16);
        assert!(g.check_channel_len(12).is_ok());
        assert!(reference(4).check_channel_len(12).is_err());
        assert!(FrameGeometry::new(288, 4, 16, 64, 4).unwrap().check_channel_len(12).is_ok());
    }

    #[test]
    fn geometry_rejects_bad_divisibility() {
        assert!(FrameGeometry::new(288, 5, 16, 32, 1).is_err());
        assert!(FrameGeometry::new(288, 8, 16, 32, 8).is_err()); // K = 36
        assert!(FrameGeometry::new(288, 4, 16, 30, 4).is_err());
    }

    #[test]
    fn ofdm_unit_vector_is_conjugate_fourier_column() {
        let g = reference(1);
        let md = Modulator::new(WaveformKind::Ofdm, &g);
        let (mb, kb) = (2, 5);
        let mut d = vec![C64::new(0.0, 0.0); g.n];
        d[mb * g.k + kb] = C64::new(1.0, 0.0);
        let x = md.modulate(&d).unwrap();
        for (m, block) in x.chunks(g.k).enumerate() {
            for (n, v) in block.iter().enumerate() {
                let want = if m == mb {
                    C64::from_polar(1.0 / (g.k as f64).sqrt(), 2.0 * PI * (kb * n) as f64 / g.k as f64)
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((v - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn otfs_unit_vector_spreads_uniformly() {
        let g = reference(1);
        let md = Modulator::new(WaveformKind::Otfs, &g);
        let mut d = vec![C64::new(0.0, 0.0); g.n];
        d[3 * g.k + 17] = C64::new(1.0, 0.0);
        let x = md.spread_fd(&d).unwrap();
        let want = 1.0 / (g.n as f64).sqrt();
        assert!(x.iter().all(|v| (v.norm() - want).abs() < 1e-12));
    }

    #[test]
    fn otfs_matches_dense_kronecker_product() {
        let (m, k) = (3, 4);
        let g = FrameGeometry::new(m * k, m, 1, 4, 1).unwrap();
        let md = Modulator::new(WaveformKind::Otfs, &g);
        let f = |n: usize, a: usize, b: usize| {
            C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * PI * (a * b) as f64 / n as f64)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = random_vec(&mut rng, m * k);
        let x = md.spread_fd(&d).unwrap();
        for r in 0..m * k {
            let (rm, rk) = (r / k, r % k);
            let want: C64 = (0..m * k)
                .map(|c| f(m, rm, c / k) * f(k, rk, c % k) * d[c])
                .sum();
            assert!((x[r] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn otfs_single_block_is_one_dft() {
        let g = FrameGeometry::new(288, 1, 16, 32, 1).unwrap();
        let md = Modulator::new(WaveformKind::Otfs, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = random_vec(&mut rng, 288);
        let x = md.spread_fd(&d).unwrap();
        let want = naive_dft(&d);
        for (a, b) in x.iter().zip(&want) {
            assert!((a - b / (288f64).sqrt()).norm() < 1e-10);
        }
    }

    #[test]
    fn modulation_is_unitary_and_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (m, _k) in [(1, 288), (2, 144), (4, 72), (8, 36)] {
            let g = FrameGeometry::new(288, m, 16, 32, 1).unwrap();
            for kind in [WaveformKind::Ofdm, WaveformKind::Otfs] {
                let md = Modulator::new(kind, &g);
                let d = random_vec(&mut rng, 288);
                let x = md.modulate(&d).unwrap();
                let (ed, ex) = (crate::dsp::energy(&d), crate::dsp::energy(&x));
                assert!((ed - ex).abs() < 1e-12 * ed);
                let back = md.demodulate(&x).unwrap();
                for (a, b) in back.iter().zip(&d) {
                    assert!((a - b).norm() < 1e-12 * ed.sqrt());
                }
            }
        }
    }

    #[test]
    fn modulate_rejects_wrong_size() {
        let md = Modulator::new(WaveformKind::Otfs, &reference(1));
        assert!(md.modulate(&[C64::new(0.0, 0.0); 10]).is_err());
    }

    #[test]
    fn cdd_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_vec(&mut rng, 72);
        assert_eq!(cdd_spread(&x, 0, 1).unwrap(), x);
        let y = cdd_spread(&x, 1, 2).unwrap();
        for n in 0..72 {
            assert!((y[n] - x[(n + 72 - 36) % 72] / 2f64.sqrt()).norm() < 1e-15);
        }
        for n_t in [1, 2, 4] {
            let e: f64 = (0..n_t).map(|nt| crate::dsp::energy(&cdd_spread(&x, nt, n_t).unwrap())).sum();
            assert!((e - crate::dsp::energy(&x)).abs() < 1e-12);
        }
        assert!(cdd_spread(&x[..71], 1, 2).is_err());
    }

    #[test]
    fn cyclic_prefix() {
        let v: Vec<C64> = (0..4).map(|i| C64::new(i as f64, 0.0)).collect();
        let p = add_cp(&v, 2);
        let re: Vec<f64> = p.iter().map(|c| c.re).collect();
        assert_eq!(re, [2.0, 3.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(strip_cp(&p, 2).unwrap(), v);
    }

    #[test]
    fn zadoff_chu_properties() {
        let z = zadoff_chu(32).unwrap();
        assert!((z[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((z[4] - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!(z.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        for v in naive_dft(&z) {
            assert!((v.norm() - 32f64.sqrt()).abs() < 1e-9);
        }
        assert!(zadoff_chu(31).is_err());
    }

    #[test]
    fn frame_layout() {
        let g = reference(2);
        let md = Modulator::new(WaveformKind::Otfs, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_vec(&mut rng, g.n);
        let uw = zadoff_chu(g.n_uw).unwrap();
        let f = build_frame(&g, &md, &d, &uw).unwrap();
        let x = md.modulate(&d).unwrap();
        for nt in 0..2 {
            assert_eq!(f.samples(nt).len(), 448);
            assert_eq!(f.uw(nt, 0), f.uw(nt, 1));
            assert_eq!(f.uw(nt, 0), &cdd_spread(&uw, nt, 2).unwrap()[..]);
            for m in 0..g.m {
                let want = cdd_spread(&x[m * g.k..(m + 1) * g.k], nt, 2).unwrap();
                assert_eq!(f.block(nt, m), &want[..]);
                let off = g.block_offset(m);
                assert_eq!(&f.samples(nt)[off - g.n_cp..off], &want[g.k - g.n_cp..]);
            }
        }
        assert!(assemble_frame(&g, &[vec![]], &[uw]).is_err());
    }

    #[test]
    fn transmit_power_is_unit() {
        let g = reference(2);
        let md = Modulator::new(WaveformKind::Ofdm, &g);
        let uw = zadoff_chu(g.n_uw).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut acc = 0.0;
        let frames = 200;
        for _ in 0..frames {
            let d: Vec<C64> = (0..g.n)
                .map(|_| {
                    let a = std::f64::consts::FRAC_1_SQRT_2;
                    C64::new(if rng.random() { a } else { -a }, if rng.random() { a } else { -a })
                })
                .collect();
            let f = build_frame(&g, &md, &d, &uw).unwrap();
            // composite power: sum over antennas per time sample
            acc += f.antennas.iter().map(|a| crate::dsp::energy(a)).sum::<f64>() / g.frame_len() as f64;
        }
        let p = acc / frames as f64;
        assert!((p - 1.0).abs() < 0.01, "{p}");
    }
}
