//! Density-operator dynamics with time-gated electronic dephasing and
//! absorbing sinks.

pub mod density;
pub mod propagator;
pub mod schedule;
pub mod sink;

pub use density::DensityState;
pub use propagator::{evolve, DensePropagator, EvolveSettings, Evolution, Observer, Record};
pub use schedule::{photon_flux_to_rate, EdgeShape, PulseSchedule, PulseWindow, SchedulePreset};
pub use sink::{
    build_sinks, build_sinks_scaled, default_sinks, reflection_check, LedgerEntry, Sink, SinkConfig, SinkLabel,
    SinkLedger, Surface,
};

use crate::model::Grid;

/// Contribution of nonselective measurement to `dρ/dt`.
///
/// With projectors `P₁ + P₂ = 1`, `γ Σ_k (P_k ρ P_k − ½{P_k, ρ})` equals
/// `γ (P₁ρP₁ + P₂ρP₂ − ρ)`: the diagonal blocks cancel and the coherence
/// blocks pick up `−γ ρ₁₂` and `−γ ρ₂₁`.
pub fn dephasing_generator(state: &DensityState, gamma: f64) -> DensityState {
    let mut out = DensityState::zeros(state.n);
    out.time = state.time;
    for (o, r) in out.rho12.iter_mut().zip(&state.rho12) {
        *o = -gamma * r;
    }
    for (o, r) in out.rho21.iter_mut().zip(&state.rho21) {
        *o = -gamma * r;
    }
    out
}

/// `(tr ρ₁₁, tr ρ₂₂)`.
pub fn electronic_populations(state: &DensityState) -> (f64, f64) {
    state.populations()
}

/// Trans product after one passage: absorbed trans probability plus the
/// excited-surface population that has already moved past the crossing.
pub fn transit_population(state: &DensityState, ledger: &SinkLedger, grid: &Grid, x_c: f64) -> f64 {
    ledger.absorbed_trans + state.excited_population_beyond(grid, x_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> DensityState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::<Complex64>::from_fn(2 * n, 2 * n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let rho = &m * m.adjoint();
        let tr = rho.trace();
        let rho = rho / tr;
        let mut s = DensityState::zeros(n);
        for i in 0..n {
            for j in 0..n {
                s.rho11[i * n + j] = rho[(i, j)];
                s.rho12[i * n + j] = rho[(i, n + j)];
                s.rho21[i * n + j] = rho[(n + i, j)];
                s.rho22[i * n + j] = rho[(n + i, n + j)];
            }
        }
        s
    }

    #[test]
    fn generator_matches_projector_sum() {
        let n = 8;
        let gamma = 1.7;
        for seed in 0..5 {
            let s = random_state(n, seed);
            let rho = s.to_matrix();
            let mut p1 = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
            let mut p2 = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
            for i in 0..n {
                p1[(i, i)] = Complex64::from(1.0);
                p2[(n + i, n + i)] = Complex64::from(1.0);
            }
            let mut direct = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
            for p in [&p1, &p2] {
                let pp = p * p;
                direct += p * &rho * p - (&pp * &rho + &rho * &pp) * Complex64::from(0.5);
            }
            direct *= Complex64::from(gamma);
            let got = dephasing_generator(&s, gamma).to_matrix();
            assert!((got - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn generator_trivial_cases() {
        let s = random_state(8, 9);
        let zero = dephasing_generator(&s, 0.0);
        assert!(zero.blocks().iter().all(|b| b.iter().all(|c| c.norm() == 0.0)));
        let mut decohered = s.clone();
        decohered.rho12.iter_mut().for_each(|c| *c = Complex64::default());
        decohered.rho21.iter_mut().for_each(|c| *c = Complex64::default());
        let d = dephasing_generator(&decohered, 5.0);
        assert!(d.blocks().iter().all(|b| b.iter().all(|c| c.norm() == 0.0)));
    }
}
