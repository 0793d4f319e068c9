use std::path::PathBuf;

use proptest::prelude::*;
use rhodopsin::analytic::diabatic_prob;
use rhodopsin::experiments::{
    emit_csv, parse_gamma_spec, parse_windows, run_fig2_sweep, run_sweep, EngineKind, Experiment,
    ExperimentConfig, ScheduleSource, SweepResult, CSV_HEADER,
};
use rhodopsin::lindblad::{EdgeShape, SchedulePreset};
use rhodopsin::locate_crossing;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        1e-12f64..1e12,
        Just(0.0),
    ]
}

fn positive() -> impl Strategy<Value = f64> {
    1e-6f64..1e4
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    let model = (
        [positive(), positive(), positive(), positive(), positive(), positive()],
        proptest::option::of(positive()),
        proptest::option::of(positive()),
    );
    let windows = proptest::collection::vec((0.0f64..100.0, 0.1f64..50.0), 0..4).prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(gap, len)| {
                let on = t + gap;
                t = on + len;
                (on, t)
            })
            .collect::<Vec<_>>()
    });
    let schedule = prop_oneof![
        (0usize..3).prop_map(|k| ScheduleSource::Preset(SchedulePreset::ALL[k])),
        windows.prop_map(ScheduleSource::Windows),
    ];
    let edge = prop_oneof![
        Just(EdgeShape::Rectangular),
        (0.1f64..20.0).prop_map(|r| EdgeShape::Smooth { ramp_fs: r }),
    ];
    let rest = (
        (4u32..12).prop_map(|b| 1usize << b),
        proptest::option::of(0.0f64..100.0),
        positive(),
        proptest::option::of(positive()),
        proptest::collection::vec(0.0f64..1e3, 0..6),
        (finite(), finite(), finite(), proptest::option::of(positive())),
        (any::<bool>(), 1usize..100_000, any::<u64>(), any::<bool>()),
        "[a-z0-9_/]{1,20}",
    );
    (model, schedule, edge, rest).prop_map(|(m, source, edge, r)| {
        let mut c = ExperimentConfig::default();
        let ([o1, o2, a, e, d, mass], dx, target) = m;
        c.model.omega1 = o1;
        c.model.omega2 = o2;
        c.model.alpha = a;
        c.model.e_in = e;
        c.model.delta_e = d;
        c.model.mass = mass;
        c.model.delta_x = dx;
        c.model.target_delta = target;
        c.schedule.source = source;
        c.schedule.edge = edge;
        let (n, pad, dt, t_final, mut gammas, sinks, engine, dir) = r;
        c.grid.n_points = n;
        c.grid.padding = pad;
        c.integrator.dt = dt;
        c.integrator.t_final = t_final;
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();
        c.gammas = gammas;
        c.sinks.strength = sinks.0.abs();
        c.sinks.cis_onset_sigmas = sinks.1;
        c.sinks.trans_onset_sigmas = sinks.2;
        c.sinks.ramp_width = sinks.3;
        c.engine.kind = if engine.0 { EngineKind::Dense } else { EngineKind::Mcwf };
        c.engine.trajectories = engine.1;
        c.engine.seed = engine.2;
        c.output.record_wall_time = engine.3;
        c.output.dir = PathBuf::from(dir);
        c
    })
}

proptest! {
    #[test]
    fn config_round_trips(c in arb_config()) {
        let text = c.to_config_string();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &c);
        prop_assert_eq!(parsed.to_config_string(), text);
    }

    #[test]
    fn parsers_never_panic(s in "\\PC{0,64}") {
        let _ = ExperimentConfig::parse(&s);
        let _ = parse_windows(&s);
        let _ = parse_gamma_spec(&s);
    }

    #[test]
    fn parsed_rates_are_sorted_and_non_negative(v in proptest::collection::vec(0.0f64..1e3, 0..10)) {
        let text = v.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",");
        let rates = parse_gamma_spec(&text).unwrap();
        prop_assert!(rates.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(rates.iter().all(|g| *g >= 0.0));
        for g in &v {
            prop_assert!(rates.contains(g));
        }
    }
}

#[test]
fn presets_expand_to_the_literal_windows() {
    let cases: [(&str, &[(f64, f64)]); 3] = [
        ("continuous_200fs", &[(0.0, 200.0)]),
        ("pulsed_single_transit", &[(90.0, 120.0)]),
        (
            "pulsed_full",
            &[(90.0, 120.0), (390.0, 420.0), (670.0, 700.0), (960.0, 990.0)],
        ),
    ];
    for (name, windows) in cases {
        let c = ExperimentConfig::parse(&format!("schedule.preset = {name}")).unwrap();
        let s = c.schedule.at_rate(2.5).unwrap();
        let got: Vec<(f64, f64, f64)> = s.windows().iter().map(|w| (w.t_on, w.t_off, w.gamma)).collect();
        let want: Vec<(f64, f64, f64)> = windows.iter().map(|&(a, b)| (a, b, 2.5)).collect();
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn config_errors_name_the_line() {
    for (text, line) in [
        ("grid.n_points = 256\nsweep.gammas = -1", 2),
        ("\n\nengine.kind = quantum", 3),
        ("model.alpha 0.1", 1),
        ("schedule.windows = 5:1", 1),
    ] {
        match ExperimentConfig::parse(text) {
            Err(rhodopsin::Error::Config { line: got, .. }) => assert_eq!(got, line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

fn small_fig2(gammas: Vec<f64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.schedule.source = ScheduleSource::Preset(SchedulePreset::Continuous200fs);
    c.gammas = gammas;
    c.output.record_wall_time = false;
    c
}

fn csv_text(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    result.write_csv(&mut buf, false).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_fig2_sweep(&small_fig2(vec![])).unwrap();
    let path = emit_csv(&result, dir.path(), false).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), format!("{CSV_HEADER}\n"));
}

#[test]
fn coherent_transit_matches_landau_zener_and_reruns_are_identical() {
    let c = small_fig2(vec![2.0, 0.0, 100.0]);
    let a = run_fig2_sweep(&c).unwrap();
    let text = csv_text(&a);
    assert_eq!(text.lines().count(), 4);
    let rates: Vec<f64> = a.rows.iter().map(|r| r.gamma).collect();
    assert_eq!(rates, vec![0.0, 2.0, 100.0]);
    assert!(a.failures().next().is_none());

    let delta = locate_crossing(&a.params).unwrap().delta;
    let coherent = a.rows[0].yield_value;
    assert!((coherent - diabatic_prob(delta)).abs() <= 0.03, "{coherent}");
    assert!(a.rows[1].yield_value > coherent && a.rows[2].yield_value > a.rows[1].yield_value);

    // different execution order, same file
    let b = run_fig2_sweep(&small_fig2(vec![100.0, 2.0, 0.0])).unwrap();
    assert_eq!(csv_text(&b), text);
    let dir = tempfile::tempdir().unwrap();
    let p1 = emit_csv(&a, &dir.path().join("one"), false).unwrap();
    let p2 = emit_csv(&b, &dir.path().join("two"), false).unwrap();
    assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
}

#[test]
fn full_horizon_rows_account_for_all_population() {
    let c = ExperimentConfig {
        gammas: vec![0.0],
        ..ExperimentConfig::default()
    };
    let r = run_sweep(&c, Experiment::Fig3).unwrap();
    let row = &r.rows[0];
    let total = row.yield_value + row.absorbed_cis + row.residual_trace;
    assert!((total - 1.0).abs() < 1e-4, "{total}");
    assert!(row.residual_trace < 0.05);
}

#[test]
fn fig2_rejects_a_different_horizon() {
    let mut c = small_fig2(vec![0.0]);
    c.integrator.t_final = Some(300.0);
    assert!(matches!(
        run_fig2_sweep(&c),
        Err(rhodopsin::Error::Experiment(_))
    ));
}
