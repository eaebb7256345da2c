//! Small DSP helpers shared by the transmitter, channel and receiver.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Complex baseband sample.
pub type C64 = Complex64;

/// A planned DFT of a fixed length.
///
/// "Unitary" variants scale by `1/sqrt(len)` in both directions, "raw" variants
/// do not scale at all (forward is `sum x[n] e^{-j2pi kn/len}`).
#[derive(Clone)]
pub struct Dft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    unitary_scale: f64,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

impl Dft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            unitary_scale: 1.0 / (len as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_raw(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    pub fn inverse_raw(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
    }

    pub fn forward_unitary(&self, buf: &mut [C64]) {
        self.forward_raw(buf);
        scale(buf, self.unitary_scale);
    }

    pub fn inverse_unitary(&self, buf: &mut [C64]) {
        self.inverse_raw(buf);
        scale(buf, self.unitary_scale);
    }

    /// Inverse of [`Dft::forward_raw`], i.e. scaled by `1/len`.
    pub fn inverse_normalized(&self, buf: &mut [C64]) {
        self.inverse_raw(buf);
        scale(buf, 1.0 / self.len as f64);
    }
}

pub fn scale(buf: &mut [C64], factor: f64) {
    for v in buf {
        *v *= factor;
    }
}

/// Circular delay: `out[n] = x[(n - shift) mod len]`, i.e. `delta_shift (*) x`.
pub fn circular_delay(x: &[C64], shift: usize) -> Vec<C64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let s = shift % len;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&x[len - s..]);
    out.extend_from_slice(&x[..len - s]);
    out
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Zeroth-order Bessel function of the first kind.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Gaussian tail probability `Q(x) = P(Z > x)` for standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
