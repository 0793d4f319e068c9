use proptest::prelude::*;
use rhodopsin::model::{build_hamiltonian, Grid, ModelParams, Wavefunction};
use rhodopsin::C64;

fn hamiltonian_matrix(params: &ModelParams, grid: &Grid) -> Vec<Vec<C64>> {
    let h = build_hamiltonian(params, grid).unwrap();
    let n = grid.n_points;
    let mut columns = Vec::with_capacity(2 * n);
    for k in 0..2 * n {
        let mut e = Wavefunction::zeros(n);
        if k < n {
            e.surface1[k] = C64::new(1.0, 0.0);
        } else {
            e.surface2[k - n] = C64::new(1.0, 0.0);
        }
        let he = h.apply(&e);
        columns.push(he.surface1.iter().chain(&he.surface2).copied().collect());
    }
    columns
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian(
        alpha in 0.0f64..0.5,
        delta_x in 50.0f64..250.0,
        lo in -200.0f64..-20.0,
        span in 100.0f64..600.0,
    ) {
        let params = ModelParams { alpha, delta_x, ..ModelParams::default() };
        let grid = Grid::new(64, lo, lo + span).unwrap();
        let m = hamiltonian_matrix(&params, &grid);
        let scale = m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        for (c, col) in m.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                prop_assert!((v - m[r][c].conj()).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn expectation_is_real_and_bounded(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let params = ModelParams::calibrated().unwrap();
        let grid = Grid::new(64, -100.0, 300.0).unwrap();
        let h = build_hamiltonian(&params, &grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut psi = Wavefunction::zeros(64);
        for c in psi.surface1.iter_mut().chain(psi.surface2.iter_mut()) {
            *c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let norm = psi.norm_sqr();
        psi.scale(1.0 / norm.sqrt());
        let value = psi.inner(&h.apply(&psi));
        prop_assert!(value.im.abs() <= 1e-10 * value.re.abs().max(1.0));
        let v_min = params.v1(0.0).min(params.delta_e) - params.alpha;
        prop_assert!(value.re >= v_min - 1e-9);
    }
}
