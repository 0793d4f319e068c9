//! `rhodopsin` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rhodopsin::experiments::{
    check_acceptance, emit_csv, run_sweep, sink_sensitivity, AcceptanceConfig, EngineKind,
    Experiment, ExperimentConfig,
};
use rhodopsin::{locate_crossing, rabi_frequency};

#[derive(Parser)]
#[command(
    name = "rhodopsin",
    version,
    about = "Retinal isomerization under measurement",
    after_help = "Worker threads: RHODOPSIN_WORKERS (default: all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rate sweep and write a CSV file.
    Simulate {
        /// Configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// fig2, fig3 or custom.
        #[arg(long, default_value = "fig3")]
        experiment: String,
        /// dense or mcwf; overrides engine.kind.
        #[arg(long)]
        engine: Option<String>,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the calibrated crossing geometry.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the acceptance suite; exits nonzero when a criterion fails.
    Accept {
        /// Comma-separated criterion ids, e.g. A1,A4.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long)]
        trajectories: Option<usize>,
        /// Multiply the calibrated offset (a negative control).
        #[arg(long)]
        offset_scale: Option<f64>,
    },
    /// Yield shift at one rate when the sinks are weakened, strengthened or shortened.
    Sensitivity {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "fig3")]
        experiment: String,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn parse_experiment(name: &str) -> Result<Experiment> {
    match Experiment::from_name(name) {
        Some(e) => Ok(e),
        None => bail!("unknown experiment '{name}' (expected fig2, fig3 or custom)"),
    }
}

fn simulate(
    config: Option<PathBuf>,
    experiment: &str,
    engine: Option<String>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut cfg = load_config(config.as_ref())?;
    let experiment = parse_experiment(experiment)?;
    if let Some(e) = engine {
        cfg.engine.kind = match EngineKind::from_name(&e) {
            Some(k) => k,
            None => bail!("unknown engine '{e}' (expected dense or mcwf)"),
        };
    }
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    let result = run_sweep(&cfg, experiment)?;
    let path = emit_csv(&result, &cfg.output.dir, cfg.output.record_wall_time)?;
    let resolved = cfg.output.dir.join(format!("{}_{}.conf", experiment.name(), cfg.engine.kind.name()));
    std::fs::write(&resolved, cfg.to_config_string())?;
    println!(
        "wrote {} ({} rows, delta_x = {:.6})",
        path.display(),
        result.rows.len(),
        result.params.delta_x
    );
    let mut failed = 0;
    for row in result.failures() {
        failed += 1;
        eprintln!(
            "row gamma = {} failed: {}",
            row.gamma,
            row.failure.as_deref().unwrap_or("")
        );
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn calibrate(config: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load_config(config.as_ref())?;
    let params = cfg.model.params()?;
    let c = locate_crossing(&params)?;
    println!("delta_x       {:.9}", params.delta_x);
    println!("x_c           {:.9}", c.x_c);
    println!("v_c           {:.9}", c.v_c);
    println!("slope_diff    {:.9e}", c.slope_diff);
    println!("delta         {:.9}", c.delta);
    println!("arrival_time  {:.6}", c.arrival_time);
    println!("rabi          {:.6}", rabi_frequency(&params));
    Ok(ExitCode::SUCCESS)
}

fn accept(only: Vec<String>, trajectories: Option<usize>, offset_scale: Option<f64>) -> Result<ExitCode> {
    let mut acc = AcceptanceConfig::default();
    if !only.is_empty() {
        acc.only = Some(only);
    }
    if let Some(n) = trajectories {
        acc.trajectories = n;
    }
    if let Some(s) = offset_scale {
        let calibrated = acc.model.params()?;
        acc.model.delta_x = Some(calibrated.delta_x * s);
    }
    let report = check_acceptance(&acc)?;
    println!("{report}");
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn sensitivity(config: Option<PathBuf>, experiment: &str, gamma: f64) -> Result<ExitCode> {
    let cfg = load_config(config.as_ref())?;
    let experiment = parse_experiment(experiment)?;
    for row in sink_sensitivity(&cfg, experiment, gamma)? {
        println!("{:<14} {:.6}  {:+.2e}", row.label, row.yield_value, row.shift);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            config,
            experiment,
            engine,
            out,
        } => simulate(config, &experiment, engine, out),
        Command::Calibrate { config } => calibrate(config),
        Command::Accept {
            only,
            trajectories,
            offset_scale,
        } => accept(only, trajectories, offset_scale),
        Command::Sensitivity {
            config,
            experiment,
            gamma,
        } => sensitivity(config, &experiment, gamma),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
