//! Frequency-domain receiver.

mod detector;
mod equalizer;

pub use detector::{llr_information, Detection, Detector, PicFeedback, MIN_EFFECTIVE_NOISE};
pub use equalizer::{fd_demux, mmse_pic_equalize, mrc_combine, EqualizerOutput, FdObservation, ERASED_VAR};
