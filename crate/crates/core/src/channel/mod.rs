//! Doubly selective MIMO Rayleigh channel.

mod fading;
mod profile;
mod propagate;

pub use fading::{generate_realization, ChannelRealization, N_OSC};
pub use profile::{
    doppler_shift, jakes_correlation, ChannelProfile, EVA_DELAYS_NS, EVA_POWERS_DB, SPEED_OF_LIGHT,
};
pub use propagate::{
    add_awgn, equivalent_block_channel, equivalent_siso, equivalent_uw_channel, propagate,
    propagate_with_rng, EquivalentChannel,
};
