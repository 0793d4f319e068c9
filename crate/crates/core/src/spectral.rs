//! FFT plumbing for the kinetic operator.
//!
//! The momentum lattice uses the standard FFT ordering: index `j < n/2` maps to
//! `k = 2πj/L`, the upper half to negative momenta.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse plans of a fixed length, cheap to clone.
#[derive(Clone)]
pub struct Spectral {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("len", &self.len).finish()
    }
}

impl Spectral {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform of every `len`-sized chunk of `data`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Unnormalized inverse transform of every `len`-sized chunk of `data`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
    }

    /// Applies `f(k_index)` as a diagonal multiplier in momentum space to a
    /// single vector, returning to position space with the `1/len` factor.
    pub fn apply_diagonal(&self, data: &mut [Complex64], diag: &[Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.forward.process(data);
        let norm = 1.0 / self.len as f64;
        for (d, m) in data.iter_mut().zip(diag) {
            *d *= m * norm;
        }
        self.inverse.process(data);
    }

    /// Real-valued diagonal variant of [`Spectral::apply_diagonal`].
    pub fn apply_real_diagonal(&self, data: &mut [Complex64], diag: &[f64]) {
        debug_assert_eq!(data.len(), self.len);
        self.forward.process(data);
        let norm = 1.0 / self.len as f64;
        for (d, m) in data.iter_mut().zip(diag) {
            *d *= m * norm;
        }
        self.inverse.process(data);
    }
}

/// Momentum lattice for `n` points with spacing `dx`, in FFT order.
pub fn momentum_lattice(n: usize, dx: f64) -> Vec<f64> {
    let length = n as f64 * dx;
    (0..n)
        .map(|j| {
            let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * std::f64::consts::PI * signed / length
        })
        .collect()
}

/// In-place square transpose of a row-major `n × n` matrix.
pub fn transpose_in_place(data: &mut [Complex64], n: usize) {
    const TILE: usize = 8;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let j_start = if bi == bj { i + 1 } else { bj };
                for j in j_start..(bj + TILE).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
