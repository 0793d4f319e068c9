//! Configuration, rate sweeps, CSV output and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod sweep;

pub use acceptance::{check_acceptance, AcceptanceConfig, AcceptanceReport, CriterionResult};
pub use config::{
    default_gamma_grid, parse_gamma_spec, parse_windows, EngineConfig, EngineKind,
    ExperimentConfig, GridConfig, IntegratorConfig, ModelConfig, OutputConfig, ScheduleConfig,
    ScheduleSource,
};
pub use sweep::{
    fmt_number, run_fig2_sweep, run_fig3_sweep, run_point, run_sweep, sink_sensitivity,
    worker_pool, Experiment, Prepared, SensitivityRow, SweepResult, SweepRow, CSV_HEADER,
    WORKERS_ENV,
};

use std::path::{Path, PathBuf};

use crate::error::Result;

/// Writes `result` to `<dir>/<experiment>_<engine>.csv`, creating `dir`.
pub fn emit_csv(result: &SweepResult, dir: &Path, record_wall_time: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let engine = result
        .rows
        .first()
        .map_or("dense", |r| r.engine.name());
    let path = dir.join(format!("{}_{engine}.csv", result.experiment.name()));
    let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    result.write_csv(file, record_wall_time)?;
    Ok(path)
}
