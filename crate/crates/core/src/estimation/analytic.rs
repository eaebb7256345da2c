//! Second-order statistics of block-averaged channels, the Wiener
//! interpolation weights and the frame-length trade-off.
//!
//! All variances are normalized to unit composite channel power per bin.
//! Per transmit antenna the channel and its errors carry `1/N_t` of that.

use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::waveform::FrameGeometry;

/// `(1/(la lb)) sum_{n<la} sum_{n'<lb} Y(n + a - n' - b)` with `Y` the
/// temporal correlation of `profile`.
pub fn block_avg_correlation(
    offset_a: usize,
    len_a: usize,
    offset_b: usize,
    len_b: usize,
    profile: &ChannelProfile,
) -> f64 {
    assert!(len_a > 0 && len_b > 0, "block lengths must be positive");
    if profile.doppler_hz == 0.0 {
        return 1.0;
    }
    let (la, lb) = (len_a as i64, len_b as i64);
    let base = offset_a as i64 - offset_b as i64;
    let mut acc = 0.0;
    // j = n - n' occurs min(la, lb + j) - max(0, j) times
    for j in -(lb - 1)..la {
        let count = la.min(lb + j) - j.max(0);
        acc += count as f64 * profile.correlation(j + base);
    }
    acc / (la * lb) as f64
}

/// Power lost to inter-carrier interference in a block of `k` samples.
pub fn doppler_error_variance(k: usize, profile: &ChannelProfile) -> f64 {
    (1.0 - block_avg_correlation(0, k, 0, k, profile)).max(0.0)
}

/// Interpolation weights for one sub-block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerSolution {
    /// Weights applied to the estimates from the first and second UW.
    pub coeffs: [f64; 2],
    /// Predicted composite error variance of the interpolated estimate.
    pub sigma2_ce: f64,
}

/// Wiener weights for sub-block `m` at noise variance `noise_var`.
///
/// The UW estimates are modelled as block averages over `N_UW` samples
/// disturbed by white noise of variance `noise_var` plus the UW's own
/// inter-carrier interference.
pub fn wiener_coeffs(m: usize, geom: &FrameGeometry, profile: &ChannelProfile, noise_var: f64) -> Result<WienerSolution> {
    if m >= geom.m {
        return Err(Error::InvalidArgument(format!("sub-block {m} out of range")));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance must be non-negative, got {noise_var}")));
    }
    let du = [geom.uw_offset(0), geom.uw_offset(1)];
    let dm = geom.block_offset(m);
    let nuw = geom.n_uw;
    let disturbance = noise_var + doppler_error_variance(nuw, profile);
    let mut r = [[0.0; 2]; 2];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = block_avg_correlation(du[i], nuw, du[j], nuw, profile);
        }
        row[i] += disturbance;
    }
    let reg = 1e-12 * (r[0][0] + r[1][1]) / 2.0;
    r[0][0] += reg;
    r[1][1] += reg;
    let b = [
        block_avg_correlation(du[0], nuw, dm, geom.k, profile),
        block_avg_correlation(du[1], nuw, dm, geom.k, profile),
    ];
    let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    let coeffs = [
        (r[1][1] * b[0] - r[0][1] * b[1]) / det,
        (r[0][0] * b[1] - r[1][0] * b[0]) / det,
    ];
    let target = block_avg_correlation(dm, geom.k, dm, geom.k, profile);
    let sigma2_ce = (target - coeffs[0] * b[0] - coeffs[1] * b[1]).max(0.0);
    Ok(WienerSolution { coeffs, sigma2_ce })
}

/// Averaged error budget of one sub-block count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameErrorStats {
    pub m: usize,
    pub sigma2_ce: f64,
    pub sigma2_d: f64,
}

impl FrameErrorStats {
    pub fn total(&self) -> f64 {
        self.sigma2_ce + self.sigma2_d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOptimization {
    pub table: Vec<FrameErrorStats>,
    pub best_m: usize,
}

/// Sub-block-averaged error budget for one geometry.
pub fn frame_error_stats(geom: &FrameGeometry, profile: &ChannelProfile, noise_var: f64) -> Result<FrameErrorStats> {
    let mut acc = 0.0;
    for m in 0..geom.m {
        acc += wiener_coeffs(m, geom, profile, noise_var)?.sigma2_ce;
    }
    Ok(FrameErrorStats {
        m: geom.m,
        sigma2_ce: acc / geom.m as f64,
        sigma2_d: doppler_error_variance(geom.k, profile),
    })
}

/// Picks the sub-block count minimizing `sigma2_ce + sigma2_d`. `template`
/// supplies `N`, `N_CP`, `N_UW` and `N_t`; its own `M` is ignored.
pub fn optimize_frame(
    candidates: &[usize],
    template: &FrameGeometry,
    profile: &ChannelProfile,
    noise_var: f64,
) -> Result<FrameOptimization> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate sub-block counts".into()));
    }
    let mut table = Vec::with_capacity(candidates.len());
    for &m in candidates {
        let g = FrameGeometry::new(template.n, m, template.n_cp, template.n_uw, template.n_t)?;
        table.push(frame_error_stats(&g, profile, noise_var)?);
    }
    let best_m = table
        .iter()
        .min_by(|a, b| a.total().total_cmp(&b.total()))
        .map(|s| s.m)
        .expect("non-empty");
    Ok(FrameOptimization { table, best_m })
}
