//! Unique-word channel estimation and its analytic error model.

mod analytic;
mod estimator;

pub use analytic::{
    block_avg_correlation, doppler_error_variance, frame_error_stats, optimize_frame, wiener_coeffs,
    FrameErrorStats, FrameOptimization, WienerSolution,
};
pub use estimator::{
    interpolate, ls_estimate, reconstruct_miso, split_per_antenna, uw_impulse_response, uw_reference,
    ChannelEstimate, ChannelEstimator,
};
