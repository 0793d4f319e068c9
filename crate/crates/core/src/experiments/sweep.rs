//! Rate sweeps with either engine, and their CSV output.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{EngineKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::lindblad::{
    build_sinks_scaled, evolve, transit_population, DensityState, EvolveSettings, PulseSchedule,
    Sink,
};
use crate::model::{
    build_grid, build_hamiltonian, default_padding, initial_state, locate_crossing, CrossingInfo,
    Grid, Hamiltonian, ModelParams, Wavefunction,
};
use crate::trajectories::{run_ensemble, EnsembleSetup};

/// Worker-count override for sweeps and trajectory ensembles.
pub const WORKERS_ENV: &str = "RHODOPSIN_WORKERS";

pub const CSV_HEADER: &str = "gamma_fs_inv,yield,absorbed_cis,residual_trace,engine,wall_time_s";

/// Which observable a sweep reports, and over what horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Trans population after the first passage, at 200 fs.
    Fig2,
    /// Absorbed trans probability at 1100 fs.
    Fig3,
    /// Absorbed trans probability at the configured horizon.
    Custom,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "fig2" => Some(Experiment::Fig2),
            "fig3" => Some(Experiment::Fig3),
            "custom" => Some(Experiment::Custom),
            _ => None,
        }
    }

    /// Horizon in fs, honouring the config only where the experiment allows.
    pub fn horizon(&self, config: &ExperimentConfig) -> Result<f64> {
        let fixed = match self {
            Experiment::Fig2 => 200.0,
            Experiment::Fig3 => 1100.0,
            Experiment::Custom => return Ok(config.integrator.t_final.unwrap_or(1100.0)),
        };
        match config.integrator.t_final {
            Some(t) if t != fixed => Err(Error::Experiment(format!(
                "{} runs to {fixed} fs, but integrator.t_final = {t}",
                self.name()
            ))),
            _ => Ok(fixed),
        }
    }
}

/// Model, grid, operators and initial state shared by every row of a sweep.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub params: ModelParams,
    pub crossing: CrossingInfo,
    pub hamiltonian: Hamiltonian,
    pub sinks: Vec<Sink>,
    pub initial: Wavefunction,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Self::with_ramp_scale(config, 1.0)
    }

    /// As [`Prepared::new`] with the sink ramps stretched by `ramp_scale`.
    pub fn with_ramp_scale(config: &ExperimentConfig, ramp_scale: f64) -> Result<Self> {
        let params = config.model.params()?;
        let padding = config.grid.padding.unwrap_or_else(|| default_padding(&params));
        let grid = build_grid(&params, config.grid.n_points, padding)?;
        let sinks = build_sinks_scaled(&params, &grid, &config.sinks, ramp_scale)?;
        let hamiltonian = build_hamiltonian(&params, &grid)?;
        let initial = initial_state(&params, &grid)?;
        Ok(Self {
            params,
            crossing: locate_crossing(&params)?,
            hamiltonian,
            sinks,
            initial,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.hamiltonian.grid
    }
}

/// One rate of a sweep. Failed rows carry NaN values and the error text.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub yield_value: f64,
    /// Standard error of `yield_value`; trajectory runs only.
    pub yield_stderr: Option<f64>,
    pub absorbed_cis: f64,
    /// Density left on the grid (trajectory runs: unresolved fraction).
    pub residual_trace: f64,
    pub engine: EngineKind,
    pub wall_time_s: f64,
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(gamma: f64, engine: EngineKind, wall_time_s: f64, e: &Error) -> Self {
        Self {
            gamma,
            yield_value: f64::NAN,
            yield_stderr: None,
            absorbed_cis: f64::NAN,
            residual_trace: f64::NAN,
            engine,
            wall_time_s,
            failure: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub params: ModelParams,
    /// Sorted by rate.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.failure.is_some())
    }

    pub fn row(&self, gamma: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.gamma == gamma)
    }

    /// Writes the header and one line per row. With `record_wall_time` off
    /// the time column is zero, so reruns are byte-identical.
    pub fn write_csv<W: Write>(&self, mut out: W, record_wall_time: bool) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let wall = if record_wall_time { r.wall_time_s } else { 0.0 };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_number(r.gamma),
                fmt_number(r.yield_value),
                fmt_number(r.absorbed_cis),
                fmt_number(r.residual_trace),
                r.engine.name(),
                fmt_number(wall),
            )?;
        }
        Ok(())
    }
}

/// Plain decimals with ten places; tiny magnitudes switch to exponent form
/// so that at least ten significant digits survive.
pub fn fmt_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || v.abs() >= 1e-4 {
        format!("{v:.10}")
    } else {
        format!("{v:.9e}")
    }
}

/// A rayon pool sized by `RHODOPSIN_WORKERS`, or rayon's default when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Experiment(format!("{WORKERS_ENV}={v} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Experiment(format!("cannot start worker pool: {e}")))
}

/// Runs one rate. Integration failures are returned as errors.
pub fn run_point(
    prepared: &Prepared,
    config: &ExperimentConfig,
    experiment: Experiment,
    gamma: f64,
) -> Result<SweepRow> {
    let t_final = experiment.horizon(config)?;
    let schedule = config.schedule.at_rate(gamma)?;
    let start = Instant::now();
    let mut row = match config.engine.kind {
        EngineKind::Dense => dense_point(prepared, config, experiment, &schedule, t_final)?,
        EngineKind::Mcwf => mcwf_point(prepared, config, experiment, &schedule, t_final)?,
    };
    row.gamma = gamma;
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(row)
}

fn dense_point(
    prepared: &Prepared,
    config: &ExperimentConfig,
    experiment: Experiment,
    schedule: &PulseSchedule,
    t_final: f64,
) -> Result<SweepRow> {
    let settings = EvolveSettings {
        dt: config.integrator.dt,
        t_final,
        record_interval: 0.0,
        positivity_checkpoints: 0,
        track_energy: false,
    };
    let ev = evolve(
        DensityState::from_pure(&prepared.initial),
        &prepared.hamiltonian,
        &prepared.sinks,
        schedule,
        &settings,
        &mut [],
    )?;
    let yield_value = match experiment {
        Experiment::Fig2 => {
            transit_population(&ev.state, &ev.ledger, prepared.grid(), prepared.crossing.x_c)
        }
        _ => ev.ledger.absorbed_trans,
    };
    Ok(SweepRow {
        gamma: 0.0,
        yield_value,
        yield_stderr: None,
        absorbed_cis: ev.ledger.absorbed_cis,
        residual_trace: ev.state.trace(),
        engine: EngineKind::Dense,
        wall_time_s: 0.0,
        failure: None,
    })
}

fn mcwf_point(
    prepared: &Prepared,
    config: &ExperimentConfig,
    experiment: Experiment,
    schedule: &PulseSchedule,
    t_final: f64,
) -> Result<SweepRow> {
    let setup = EnsembleSetup {
        hamiltonian: &prepared.hamiltonian,
        sinks: &prepared.sinks,
        initial: &prepared.initial,
        dt: config.integrator.dt,
        t_final,
        checkpoints: Vec::new(),
        transit_threshold: (experiment == Experiment::Fig2).then_some(prepared.crossing.x_c),
    };
    let n = config.engine.trajectories;
    let r = run_ensemble(&setup, schedule, n, config.engine.seed)?;
    let (yield_value, stderr) = match r.transit {
        Some(t) => (t.mean, t.stderr),
        None => (r.yield_mean, r.yield_stderr),
    };
    Ok(SweepRow {
        gamma: 0.0,
        yield_value,
        yield_stderr: Some(stderr),
        absorbed_cis: r.cis as f64 / n as f64,
        residual_trace: r.unresolved as f64 / n as f64,
        engine: EngineKind::Mcwf,
        wall_time_s: 0.0,
        failure: None,
    })
}

/// Runs every rate in `config.gammas`. Rows that fail to integrate are kept
/// and flagged; configuration errors abort the sweep.
pub fn run_sweep(config: &ExperimentConfig, experiment: Experiment) -> Result<SweepResult> {
    config.validate()?;
    experiment.horizon(config)?;
    let prepared = Prepared::new(config)?;
    let mut gammas = config.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let pool = worker_pool()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        gammas
            .par_iter()
            .map(|&g| {
                let start = Instant::now();
                match run_point(&prepared, config, experiment, g) {
                    Ok(row) => Ok(row),
                    Err(e @ (Error::StepInstability { .. } | Error::StepTooLarge { .. })) => Ok(
                        SweepRow::failed(g, config.engine.kind, start.elapsed().as_secs_f64(), &e),
                    ),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()
    })?;
    Ok(SweepResult {
        experiment,
        params: prepared.params,
        rows,
    })
}

pub fn run_fig2_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(config, Experiment::Fig2)
}

pub fn run_fig3_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(config, Experiment::Fig3)
}

/// Yield under one sink variant, and its shift from the configured sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub label: &'static str,
    pub yield_value: f64,
    pub shift: f64,
}

/// Re-runs one rate with the sink strength halved and doubled and with the
/// ramps shortened to half length.
pub fn sink_sensitivity(
    config: &ExperimentConfig,
    experiment: Experiment,
    gamma: f64,
) -> Result<Vec<SensitivityRow>> {
    let mut variants: Vec<(&'static str, ExperimentConfig, f64)> =
        vec![("baseline", config.clone(), 1.0)];
    for (label, factor) in [("strength x0.5", 0.5), ("strength x2", 2.0)] {
        let mut c = config.clone();
        c.sinks.strength *= factor;
        variants.push((label, c, 1.0));
    }
    variants.push(("ramp x0.5", config.clone(), 0.5));

    let pool = worker_pool()?;
    let yields: Vec<f64> = pool.install(|| {
        variants
            .par_iter()
            .map(|(_, c, scale)| {
                let prepared = Prepared::with_ramp_scale(c, *scale)?;
                run_point(&prepared, c, experiment, gamma).map(|r| r.yield_value)
            })
            .collect::<Result<_>>()
    })?;
    Ok(variants
        .iter()
        .zip(&yields)
        .map(|((label, _, _), &y)| SensitivityRow {
            label,
            yield_value: y,
            shift: y - yields[0],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_keeps_digits() {
        assert_eq!(fmt_number(0.0), "0.0000000000");
        assert_eq!(fmt_number(0.657044), "0.6570440000");
        assert_eq!(fmt_number(100.0), "100.0000000000");
        assert_eq!(fmt_number(1.234e-7), "1.234000000e-7");
        assert_eq!(fmt_number(f64::NAN), "NaN");
        for v in [0.012345678, 1.5e-9, 42.0] {
            let back: f64 = fmt_number(v).parse().unwrap();
            assert!((back - v).abs() <= 1e-9 * v.abs());
        }
    }

    #[test]
    fn horizons() {
        let mut c = ExperimentConfig::default();
        assert_eq!(Experiment::Fig2.horizon(&c).unwrap(), 200.0);
        assert_eq!(Experiment::Fig3.horizon(&c).unwrap(), 1100.0);
        c.integrator.t_final = Some(500.0);
        assert!(Experiment::Fig2.horizon(&c).is_err());
        assert_eq!(Experiment::Custom.horizon(&c).unwrap(), 500.0);
    }

    #[test]
    fn csv_layout() {
        let result = SweepResult {
            experiment: Experiment::Fig3,
            params: ModelParams::default(),
            rows: vec![SweepRow {
                gamma: 2.0,
                yield_value: 0.5,
                yield_stderr: None,
                absorbed_cis: 0.25,
                residual_trace: 0.25,
                engine: EngineKind::Dense,
                wall_time_s: 1.5,
                failure: None,
            }],
        };
        let mut buf = Vec::new();
        result.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "2.0000000000,0.5000000000,0.2500000000,0.2500000000,dense,0.0000000000"
        );
    }
}
