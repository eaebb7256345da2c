//! Bit-interleaved coded modulation: RSC coding, puncturing, interleaving,
//! Gray QAM mapping, max-log demapping and SISO decoding.

mod bcjr;
mod code;
mod interleaver;
mod qam;

pub use bcjr::{decode_siso, SisoDecoder, SisoOutput};
pub use code::{
    encode, CodeConfig, CodeRate, PuncturePattern, Termination, Trellis, CONSTRAINT_LENGTH,
    FEEDBACK_POLY, MEMORY, NUM_STATES, PARITY_POLY,
};
pub use interleaver::Interleaver;
pub use qam::{hard_decisions, Constellation, Modulation, SoftSymbols};

/// Magnitude limit applied to every LLR leaving a soft component.
pub const LLR_CLAMP: f64 = 50.0;

pub fn clamp_llr(l: f64) -> f64 {
    l.clamp(-LLR_CLAMP, LLR_CLAMP)
}
