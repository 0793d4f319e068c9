use rhodopsin::lindblad::{
    default_sinks, evolve, transit_population, DensityState, EdgeShape, EvolveSettings,
    SchedulePreset,
};
use rhodopsin::model::{
    build_grid, build_hamiltonian, default_padding, initial_state, locate_crossing, ModelParams,
};
use rhodopsin::trajectories::{run_ensemble, EnsembleSetup};

#[test]
fn trajectory_averages_match_the_density_operator() {
    let p = ModelParams::calibrated().unwrap();
    let g = build_grid(&p, 256, default_padding(&p)).unwrap();
    let h = build_hamiltonian(&p, &g).unwrap();
    let sinks = default_sinks(&p, &g).unwrap();
    let psi = initial_state(&p, &g).unwrap();
    let x_c = locate_crossing(&p).unwrap().x_c;
    let schedule = SchedulePreset::PulsedSingleTransit
        .schedule(2.0, EdgeShape::Rectangular)
        .unwrap();

    let dense = evolve(
        DensityState::from_pure(&psi),
        &h,
        &sinks,
        &schedule,
        &EvolveSettings {
            dt: 0.2,
            t_final: 200.0,
            record_interval: 50.0,
            ..EvolveSettings::default()
        },
        &mut [],
    )
    .unwrap();
    let dense_transit = transit_population(&dense.state, &dense.ledger, &g, x_c);

    let setup = EnsembleSetup {
        hamiltonian: &h,
        sinks: &sinks,
        initial: &psi,
        dt: 0.2,
        t_final: 200.0,
        checkpoints: vec![50.0, 100.0, 150.0, 200.0],
        transit_threshold: Some(x_c),
    };
    let mc = run_ensemble(&setup, &schedule, 600, 11).unwrap();

    for c in &mc.checkpoints {
        let r = dense
            .records
            .iter()
            .find(|r| (r.time - c.time).abs() < 1e-9)
            .expect("matching record");
        for (est, exact) in [(c.pop1, r.pop1), (c.pop2, r.pop2)] {
            let tol = 3.0 * est.stderr + 1e-3;
            assert!((est.mean - exact).abs() <= tol, "t = {}: {est:?} vs {exact}", c.time);
        }
    }
    let transit = mc.transit.unwrap();
    assert!(
        (transit.mean - dense_transit).abs() <= 3.0 * transit.stderr,
        "{transit:?} vs {dense_transit}"
    );
}

#[test]
fn trajectories_without_measurement_only_end_in_sinks() {
    let p = ModelParams::calibrated().unwrap();
    let g = build_grid(&p, 256, default_padding(&p)).unwrap();
    let h = build_hamiltonian(&p, &g).unwrap();
    let sinks = default_sinks(&p, &g).unwrap();
    let psi = initial_state(&p, &g).unwrap();
    let setup = EnsembleSetup {
        hamiltonian: &h,
        sinks: &sinks,
        initial: &psi,
        dt: 0.2,
        t_final: 300.0,
        checkpoints: vec![300.0],
        transit_threshold: None,
    };
    let schedule = SchedulePreset::PulsedSingleTransit
        .schedule(0.0, EdgeShape::Rectangular)
        .unwrap();
    let r = run_ensemble(&setup, &schedule, 64, 3).unwrap();
    assert_eq!(r.cis + r.trans + r.unresolved, 64);
    assert!(r.transit.is_none());
    let c = r.checkpoints[0];
    let total = c.pop1.mean + c.pop2.mean + c.absorbed_cis.mean + c.absorbed_trans.mean;
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}
