//! Two-surface retinal photoisomerization under nonselective electronic
//! measurement.
//!
//! The crate propagates a 1-D wave packet on two coupled harmonic surfaces,
//! either as a dense density operator under a Lindblad master equation
//! ([`lindblad`]) or as an ensemble of quantum-jump trajectories
//! ([`trajectories`]). Absorbing potentials at the well minima collect the
//! cis and trans products. [`analytic`] holds Landau-Zener reference values,
//! [`experiments`] the sweep harness behind the CLI.

// NaN-rejecting range checks read as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod model;
pub mod spectral;
pub mod trajectories;
pub mod wavepacket;

pub use error::{Error, Result};
pub use model::{
    build_grid, build_hamiltonian, calibrate_offset, initial_state, locate_crossing,
    rabi_frequency, CrossingInfo, Grid, Hamiltonian, ModelParams, Wavefunction,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
