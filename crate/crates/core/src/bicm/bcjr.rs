//! Max-log BCJR soft-in/soft-out decoder for the RSC code.

use super::code::{demultiplex, multiplex, CodeConfig, Termination, Trellis, NUM_STATES};
use super::{clamp_llr, LLR_CLAMP};
use crate::error::Result;

const NEG: f64 = -1.0e30;

/// Result of one SISO decoding pass.
#[derive(Debug, Clone)]
pub struct SisoOutput {
    /// Extrinsic LLRs on the coded bits, in the same (punctured) order as the input.
    pub extrinsic: Vec<f64>,
    /// A-posteriori LLRs of the information bits.
    pub info_llr: Vec<f64>,
    /// Hard decisions; an LLR of exactly zero decides 0.
    pub info_bits: Vec<u8>,
}

/// Reusable decoder for one code configuration.
#[derive(Debug, Clone)]
pub struct SisoDecoder {
    cfg: CodeConfig,
    trellis: Trellis,
}

impl SisoDecoder {
    pub fn new(cfg: &CodeConfig) -> Result<Self> {
        Ok(Self {
            cfg: cfg.clone(),
            trellis: Trellis::new(cfg.feedback, cfg.parity)?,
        })
    }

    pub fn config(&self) -> &CodeConfig {
        &self.cfg
    }

    /// Decodes a punctured coded LLR block (sign convention `log P(0)/P(1)`).
    pub fn decode(&self, llrs: &[f64]) -> Result<SisoOutput> {
        let info_len = self.cfg.info_len_for(llrs.len())?;
        let steps = self.cfg.trellis_len(info_len);
        let pattern = self.cfg.rate.puncture_pattern();
        let (ls, lp) = demultiplex(llrs, steps, &pattern);
        let tr = &self.trellis;

        // Branch metric for bit b with LLR l is +l/2 (b = 0) or -l/2 (b = 1).
        let half = |b: u8, l: f64| if b == 0 { 0.5 * l } else { -0.5 * l };
        let inputs = |t: usize, s: usize| -> (usize, usize) {
            if t < info_len {
                (0, 2)
            } else {
                let u = tr.tail_input[s] as usize;
                (u, u + 1)
            }
        };

        let mut alpha = vec![NEG; (steps + 1) * NUM_STATES];
        alpha[0] = 0.0;
        for t in 0..steps {
            let (cur, nxt) = alpha[t * NUM_STATES..(t + 2) * NUM_STATES].split_at_mut(NUM_STATES);
            for s in 0..NUM_STATES {
                let a = cur[s];
                if a <= NEG {
                    continue;
                }
                let (lo, hi) = inputs(t, s);
                for u in lo..hi {
                    let g = half(u as u8, ls[t]) + half(tr.parity[s][u], lp[t]);
                    let ns = tr.next[s][u] as usize;
                    let m = a + g;
                    if m > nxt[ns] {
                        nxt[ns] = m;
                    }
                }
            }
            let max = nxt.iter().copied().fold(NEG, f64::max);
            for v in nxt.iter_mut() {
                if *v > NEG {
                    *v -= max;
                }
            }
        }

        let mut beta = match self.cfg.termination {
            Termination::ZeroTail => {
                let mut b = [NEG; NUM_STATES];
                b[0] = 0.0;
                b
            }
            Termination::Truncated => [0.0; NUM_STATES],
        };
        let mut ext_s = vec![0.0; steps];
        let mut ext_p = vec![0.0; steps];
        let mut info_llr = vec![0.0; info_len];
        for t in (0..steps).rev() {
            let cur = &alpha[t * NUM_STATES..(t + 1) * NUM_STATES];
            let mut best_u = [NEG; 2];
            let mut best_p = [NEG; 2];
            let mut prev = [NEG; NUM_STATES];
            for s in 0..NUM_STATES {
                let (lo, hi) = inputs(t, s);
                for u in lo..hi {
                    let p = tr.parity[s][u];
                    let g = half(u as u8, ls[t]) + half(p, lp[t]);
                    let ns = tr.next[s][u] as usize;
                    let bg = beta[ns] + g;
                    if bg > prev[s] {
                        prev[s] = bg;
                    }
                    let m = cur[s] + bg;
                    if m > best_u[u] {
                        best_u[u] = m;
                    }
                    if m > best_p[p as usize] {
                        best_p[p as usize] = m;
                    }
                }
            }
            let app_u = clamp_llr(best_u[0] - best_u[1]);
            let app_p = clamp_llr(best_p[0] - best_p[1]);
            if t < info_len {
                info_llr[t] = app_u;
            }
            ext_s[t] = clamp_llr(app_u - ls[t]);
            ext_p[t] = clamp_llr(app_p - lp[t]);
            let max = prev.iter().copied().fold(NEG, f64::max);
            for v in prev.iter_mut() {
                if *v > NEG {
                    *v -= max;
                }
            }
            beta = prev;
        }

        let extrinsic = multiplex(&ext_s, &ext_p, &pattern);
        let info_bits = info_llr.iter().map(|&l| (l < 0.0) as u8).collect();
        debug_assert!(extrinsic.iter().all(|v| v.abs() <= LLR_CLAMP));
        Ok(SisoOutput {
            extrinsic,
            info_llr,
            info_bits,
        })
    }
}

/// Convenience wrapper building a decoder for a single call.
pub fn decode_siso(llrs: &[f64], cfg: &CodeConfig) -> Result<SisoOutput> {
    SisoDecoder::new(cfg)?.decode(llrs)
}
