//! Link-level simulation of unique-word channel estimation for MIMO CDD
//! OTFS and OFDM over doubly selective channels.

pub mod bicm;
pub mod channel;
pub mod dsp;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod receiver;
pub mod waveform;

pub use error::{Error, Result};
pub use bicm::{CodeRate, Modulation};
pub use dsp::C64;
pub use harness::{FerRecord, SimConfig};
pub use waveform::{FrameGeometry, WaveformKind};
