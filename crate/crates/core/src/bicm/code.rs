//! Recursive systematic convolutional code, puncturing and trellis tables.
//!
//! Generator polynomials are octal with the most significant bit acting on
//! the current register input (`D^0`). For the default `{133, 171}` code the
//! feedback polynomial is `133` and the parity polynomial is `171`:
//!
//! ```text
//! a_t = u_t ^ sum_{i=1..6} fb_i a_{t-i}
//! p_t =       sum_{i=0..6} ff_i a_{t-i}
//! ```
//!
//! The coded stream is multiplexed per trellis step as `s_t` followed by
//! `p_t` when the puncturing pattern keeps that parity position.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const FEEDBACK_POLY: u32 = 0o133;
pub const PARITY_POLY: u32 = 0o171;
pub const CONSTRAINT_LENGTH: usize = 7;
pub const MEMORY: usize = CONSTRAINT_LENGTH - 1;
pub const NUM_STATES: usize = 1 << MEMORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeRate {
    Half,
    ThreeQuarters,
}

impl CodeRate {
    pub fn value(self) -> f64 {
        match self {
            CodeRate::Half => 0.5,
            CodeRate::ThreeQuarters => 0.75,
        }
    }

    /// Puncturing mask over parity positions.
    ///
    /// Rate 3/4 keeps one parity bit out of every three, removing two thirds
    /// of the parity stream of the rate-1/2 mother code.
    pub fn puncture_pattern(self) -> PuncturePattern {
        match self {
            CodeRate::Half => PuncturePattern::new(vec![true]),
            CodeRate::ThreeQuarters => PuncturePattern::new(vec![true, false, false]),
        }
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeRate::Half => f.write_str("1/2"),
            CodeRate::ThreeQuarters => f.write_str("3/4"),
        }
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" | "0.5" => Ok(CodeRate::Half),
            "3/4" | "0.75" => Ok(CodeRate::ThreeQuarters),
            other => Err(Error::Config(format!("unsupported code rate `{other}`"))),
        }
    }
}

/// Periodic keep/drop mask applied to the parity stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    keep: Vec<bool>,
}

impl PuncturePattern {
    pub fn new(keep: Vec<bool>) -> Self {
        assert!(!keep.is_empty(), "puncture pattern must not be empty");
        Self { keep }
    }

    pub fn period(&self) -> usize {
        self.keep.len()
    }

    pub fn keeps(&self, position: usize) -> bool {
        self.keep[position % self.keep.len()]
    }

    pub fn kept_per_period(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Number of surviving positions for a stream of `len` parity bits.
    pub fn kept_len(&self, len: usize) -> Result<usize> {
        self.check_period(len)?;
        Ok(len / self.period() * self.kept_per_period())
    }

    fn check_period(&self, len: usize) -> Result<()> {
        if !len.is_multiple_of(self.period()) {
            return Err(Error::Config(format!(
                "stream length {len} is not a multiple of the puncture period {}",
                self.period()
            )));
        }
        Ok(())
    }

    pub fn puncture<T: Copy>(&self, stream: &[T]) -> Result<Vec<T>> {
        self.check_period(stream.len())?;
        Ok(stream
            .iter()
            .enumerate()
            .filter(|(i, _)| self.keeps(*i))
            .map(|(_, &v)| v)
            .collect())
    }

    /// Re-inserts erasures (LLR 0) at punctured positions.
    pub fn depuncture(&self, llrs: &[f64]) -> Result<Vec<f64>> {
        let kept = self.kept_per_period();
        if !llrs.len().is_multiple_of(kept) {
            return Err(Error::Config(format!(
                "{} LLRs do not fill whole puncture periods of {kept} kept bits",
                llrs.len()
            )));
        }
        let full = llrs.len() / kept * self.period();
        let mut out = Vec::with_capacity(full);
        let mut src = llrs.iter();
        for i in 0..full {
            if self.keeps(i) {
                out.push(*src.next().expect("length checked above"));
            } else {
                out.push(0.0);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Append `MEMORY` tail steps that drive the encoder back to state zero.
    ZeroTail,
    /// Stop after the last information bit; the end state is unknown.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeConfig {
    pub feedback: u32,
    pub parity: u32,
    pub rate: CodeRate,
    pub termination: Termination,
}

impl CodeConfig {
    pub fn new(rate: CodeRate) -> Self {
        Self {
            feedback: FEEDBACK_POLY,
            parity: PARITY_POLY,
            rate,
            termination: Termination::ZeroTail,
        }
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn tail_len(&self) -> usize {
        match self.termination {
            Termination::ZeroTail => MEMORY,
            Termination::Truncated => 0,
        }
    }

    pub fn trellis_len(&self, info_len: usize) -> usize {
        info_len + self.tail_len()
    }

    /// Coded (punctured) length for `info_len` information bits.
    pub fn coded_len(&self, info_len: usize) -> Result<usize> {
        if info_len == 0 {
            return Err(Error::InvalidArgument("empty information block".into()));
        }
        let steps = self.trellis_len(info_len);
        Ok(steps + self.rate.puncture_pattern().kept_len(steps)?)
    }

    /// Number of information bits that fill exactly `coded_len` coded bits.
    pub fn info_len_for(&self, coded_len: usize) -> Result<usize> {
        let pattern = self.rate.puncture_pattern();
        let per_period = pattern.period() + pattern.kept_per_period();
        if !coded_len.is_multiple_of(per_period) {
            return Err(Error::Config(format!(
                "coded length {coded_len} is not a whole number of rate-{} periods",
                self.rate
            )));
        }
        let steps = coded_len / per_period * pattern.period();
        steps
            .checked_sub(self.tail_len())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("coded length {coded_len} too short")))
    }
}

/// State transition tables of the RSC code.
#[derive(Debug, Clone)]
pub struct Trellis {
    /// `next[s][u]`
    pub next: [[u8; 2]; NUM_STATES],
    /// `parity[s][u]`
    pub parity: [[u8; 2]; NUM_STATES],
    /// Input that forces the register input to zero from state `s`.
    pub tail_input: [u8; NUM_STATES],
}

fn tap(poly: u32, i: usize) -> u32 {
    (poly >> (MEMORY - i)) & 1
}

impl Trellis {
    /// State bit `i-1` holds `a_{t-i}`.
    pub fn new(feedback: u32, parity: u32) -> Result<Self> {
        if feedback >> MEMORY != 1 || parity >> CONSTRAINT_LENGTH != 0 {
            return Err(Error::Config(format!(
                "polynomials {feedback:o}/{parity:o} are not constraint length {CONSTRAINT_LENGTH}"
            )));
        }
        let mut next = [[0u8; 2]; NUM_STATES];
        let mut par = [[0u8; 2]; NUM_STATES];
        let mut tail_input = [0u8; NUM_STATES];
        for s in 0..NUM_STATES {
            let past = |i: usize| ((s >> (i - 1)) & 1) as u32;
            let fb: u32 = (1..=MEMORY).map(|i| tap(feedback, i) & past(i)).sum::<u32>() & 1;
            tail_input[s] = fb as u8;
            for u in 0..2u32 {
                let a = (u ^ fb) & 1;
                let p = (tap(parity, 0) & a)
                    ^ ((1..=MEMORY).map(|i| tap(parity, i) & past(i)).sum::<u32>() & 1);
                next[s][u as usize] = (((s << 1) | a as usize) & (NUM_STATES - 1)) as u8;
                par[s][u as usize] = p as u8;
            }
        }
        Ok(Self {
            next,
            parity: par,
            tail_input,
        })
    }
}

/// Systematic and parity streams of one trellis run (tail included).
pub(crate) fn run_encoder(trellis: &Trellis, info_bits: &[u8], tail: usize) -> (Vec<u8>, Vec<u8>) {
    let mut sys = Vec::with_capacity(info_bits.len() + tail);
    let mut par = Vec::with_capacity(info_bits.len() + tail);
    let mut state = 0usize;
    for &b in info_bits {
        let u = (b & 1) as usize;
        sys.push(u as u8);
        par.push(trellis.parity[state][u]);
        state = trellis.next[state][u] as usize;
    }
    for _ in 0..tail {
        let u = trellis.tail_input[state] as usize;
        sys.push(u as u8);
        par.push(trellis.parity[state][u]);
        state = trellis.next[state][u] as usize;
    }
    debug_assert!(tail == 0 || state == 0);
    (sys, par)
}

/// Interleaves the systematic stream with the surviving parity bits.
pub(crate) fn multiplex<T: Copy>(sys: &[T], parity: &[T], pattern: &PuncturePattern) -> Vec<T> {
    let mut out = Vec::with_capacity(sys.len() * 2);
    for (t, (&s, &p)) in sys.iter().zip(parity).enumerate() {
        out.push(s);
        if pattern.keeps(t) {
            out.push(p);
        }
    }
    out
}

/// Splits a coded LLR stream into per-step systematic and parity LLRs,
/// with zeros at punctured parity positions.
pub(crate) fn demultiplex(
    llrs: &[f64],
    steps: usize,
    pattern: &PuncturePattern,
) -> (Vec<f64>, Vec<f64>) {
    let mut sys = Vec::with_capacity(steps);
    let mut par = Vec::with_capacity(steps);
    let mut it = llrs.iter().copied();
    for t in 0..steps {
        sys.push(it.next().unwrap_or(0.0));
        par.push(if pattern.keeps(t) {
            it.next().unwrap_or(0.0)
        } else {
            0.0
        });
    }
    (sys, par)
}

/// Encodes `info_bits` (values 0/1) into the punctured coded stream.
pub fn encode(info_bits: &[u8], cfg: &CodeConfig) -> Result<Vec<u8>> {
    let coded_len = cfg.coded_len(info_bits.len())?;
    let trellis = Trellis::new(cfg.feedback, cfg.parity)?;
    let (sys, par) = run_encoder(&trellis, info_bits, cfg.tail_len());
    let out = multiplex(&sys, &par, &cfg.rate.puncture_pattern());
    debug_assert_eq!(out.len(), coded_len);
    Ok(out)
}
