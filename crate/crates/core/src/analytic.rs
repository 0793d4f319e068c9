//! Landau-Zener reference values.
//!
//! A packet crossing the avoided crossing once stays on its diabatic surface
//! with probability `q = exp(−2πδ)`. Each further transit of a packet that has
//! not yet reached a well repeats the same branching, which gives the
//! sequential yield of [`sequential_yield`].

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Adiabaticity parameter of a single avoided crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzParams {
    pub delta: f64,
}

impl LzParams {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "adiabaticity parameter must be non-negative, got {delta}"
            )));
        }
        Ok(Self { delta })
    }
}

/// Probability of a diabatic passage, `exp(−2πδ)`.
pub fn diabatic_prob(delta: f64) -> f64 {
    (-2.0 * PI * delta).exp()
}

/// The two infinite-dephasing reference values of one transit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasedLimits {
    /// Adiabatic-transfer probability under infinitely strong dephasing,
    /// `(1 − exp(−4πδ))/2`.
    pub tunnel_limit: f64,
    /// Diabatic-passage population above which dephasing has started to help,
    /// `(1 + exp(−4πδ))/2`.
    pub passage_threshold: f64,
}

pub fn dephased_limit_prob(delta: f64) -> DephasedLimits {
    let e = (-4.0 * PI * delta).exp();
    DephasedLimits {
        tunnel_limit: 0.5 * (1.0 - e),
        passage_threshold: 0.5 * (1.0 + e),
    }
}

/// Trans yield after `n` transits: `q Σ_{i=0}^{(n−1)/2} (1 − q)^{2i}`.
///
/// Odd transits head towards the trans well, so only odd `n` are meaningful.
pub fn sequential_yield(n: u32, delta: f64) -> Result<f64> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::InvalidTransitCount(n));
    }
    let q = diabatic_prob(delta);
    let p2 = (1.0 - q) * (1.0 - q);
    let mut term = q;
    let mut sum = 0.0;
    for _ in 0..=(n - 1) / 2 {
        sum += term;
        term *= p2;
    }
    Ok(sum)
}

/// Limit of [`sequential_yield`] for infinitely many transits, `q/(1 − p²)`.
pub fn sequential_yield_limit(delta: f64) -> f64 {
    let q = diabatic_prob(delta);
    let p = 1.0 - q;
    if q == 0.0 {
        return 0.5;
    }
    q / (1.0 - p * p)
}

/// Single-transit diabatic-passage probability under measurement rate `gamma`.
///
/// The closed form for an open Landau-Zener crossing lives outside this
/// crate; implement this trait to supply it.
pub trait TransitModel {
    fn passage_prob(&self, gamma: f64, delta: f64) -> f64;
}

/// Logistic interpolation in `log γ` between the coherent value
/// `exp(−2πδ)` and 1, centred on `gamma_mid`.
///
/// Not a physical formula: it only has the right two limits and exists so
/// the plumbing can be exercised without the real expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticPlaceholder {
    pub gamma_mid: f64,
    pub steepness: f64,
}

impl Default for LogisticPlaceholder {
    fn default() -> Self {
        Self {
            gamma_mid: 10.0,
            steepness: 2.0,
        }
    }
}

impl TransitModel for LogisticPlaceholder {
    fn passage_prob(&self, gamma: f64, delta: f64) -> f64 {
        let q = diabatic_prob(delta);
        if gamma <= 0.0 {
            return q;
        }
        let s = 1.0 / (1.0 + (-(self.steepness) * (gamma / self.gamma_mid).ln()).exp());
        q + (1.0 - q) * s
    }
}
