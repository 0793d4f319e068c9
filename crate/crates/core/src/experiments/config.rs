//! Flat `section.key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! model.alpha = 0.1
//! model.delta_x = calibrate
//! grid.n_points = 256
//! schedule.preset = pulsed_full
//! sweep.gammas = 0, log:0.01:100:40
//! engine.kind = dense
//! ```
//!
//! Every key is optional; unknown keys and repeated keys are errors. See
//! [`ExperimentConfig::to_config_string`] for the full key list.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::lindblad::{EdgeShape, PulseSchedule, PulseWindow, SchedulePreset, SinkConfig};
use crate::model::{calibrate_offset, ModelParams};

/// Model constants; `delta_x = None` calibrates the offset against
/// `target_delta` (or `11.5 α²` when that is `None` too).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha: f64,
    pub e_in: f64,
    pub delta_e: f64,
    pub mass: f64,
    pub delta_x: Option<f64>,
    pub target_delta: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            omega1: p.omega1,
            omega2: p.omega2,
            alpha: p.alpha,
            e_in: p.e_in,
            delta_e: p.delta_e,
            mass: p.mass,
            delta_x: None,
            target_delta: None,
        }
    }
}

impl ModelConfig {
    /// Resolved parameters, running the offset calibration when requested.
    pub fn params(&self) -> Result<ModelParams> {
        let mut p = ModelParams {
            omega1: self.omega1,
            omega2: self.omega2,
            alpha: self.alpha,
            e_in: self.e_in,
            delta_e: self.delta_e,
            delta_x: self.delta_x.unwrap_or(1.0),
            mass: self.mass,
        };
        p.validate()?;
        if self.delta_x.is_none() {
            let target = self.target_delta.unwrap_or_else(|| p.target_delta());
            p = calibrate_offset(&p, target)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_points: usize,
    /// `None` pads by three initial packet widths.
    pub padding: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 256,
            padding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// `None` uses the experiment's own horizon.
    pub t_final: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            t_final: None,
        }
    }
}

/// Where the measurement windows come from; the rate is set per sweep row.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSource {
    Preset(SchedulePreset),
    Windows(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub source: ScheduleSource,
    pub edge: EdgeShape,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            source: ScheduleSource::Preset(SchedulePreset::PulsedFull),
            edge: EdgeShape::Rectangular,
        }
    }
}

impl ScheduleConfig {
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        match &self.source {
            ScheduleSource::Preset(p) => p.intervals().to_vec(),
            ScheduleSource::Windows(w) => w.clone(),
        }
    }

    pub fn at_rate(&self, gamma: f64) -> Result<PulseSchedule> {
        let windows = self
            .intervals()
            .into_iter()
            .map(|(a, b)| PulseWindow::new(a, b, gamma))
            .collect();
        PulseSchedule::new(windows, self.edge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Dense,
    Mcwf,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Dense => "dense",
            EngineKind::Mcwf => "mcwf",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "dense" => Some(EngineKind::Dense),
            "mcwf" => Some(EngineKind::Mcwf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            kind: EngineKind::Dense,
            trajectories: 2000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write measured run times; off gives byte-identical reruns.
    pub record_wall_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            record_wall_time: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub integrator: IntegratorConfig,
    pub schedule: ScheduleConfig,
    pub gammas: Vec<f64>,
    pub sinks: SinkConfig,
    pub engine: EngineConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            integrator: IntegratorConfig::default(),
            schedule: ScheduleConfig::default(),
            gammas: default_gamma_grid(),
            sinks: SinkConfig::default(),
            engine: EngineConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// γ = 0 followed by 40 log-spaced rates from 10⁻² to 10² fs⁻¹.
pub fn default_gamma_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_space(1e-2, 1e2, 40));
    g
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| {
            if k == count - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses `t_on:t_off` pairs separated by commas, e.g. `90:120, 390:420`.
/// An empty string is an empty list.
pub fn parse_windows(spec: &str) -> Result<Vec<(f64, f64)>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for item in spec.split(',') {
        let (a, b) = item
            .split_once(':')
            .ok_or_else(|| config_err(0, format!("window '{}' is not t_on:t_off", item.trim())))?;
        let (a, b) = match (parse_f64(a), parse_f64(b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(config_err(0, format!("window '{}' has a bad number", item.trim()))),
        };
        if a >= b {
            return Err(config_err(0, format!("window [{a}, {b}] needs t_on < t_off")));
        }
        if let Some(&(_, prev)) = out.last() {
            if a < prev {
                return Err(config_err(0, format!("window starting at {a} overlaps or is unsorted")));
            }
        }
        out.push((a, b));
    }
    Ok(out)
}

/// Parses a rate list: comma-separated numbers and `log:lo:hi:count` ranges,
/// e.g. `0, log:0.01:100:40`. The result is sorted and deduplicated.
pub fn parse_gamma_spec(spec: &str) -> Result<Vec<f64>> {
    const MAX_POINTS: usize = 100_000;
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        if let Some(range) = item.strip_prefix("log:") {
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(config_err(0, format!("range '{item}' is not log:lo:hi:count")));
            }
            let (lo, hi) = match (parse_f64(parts[0]), parse_f64(parts[1])) {
                (Some(lo), Some(hi)) if lo > 0.0 && hi >= lo => (lo, hi),
                _ => return Err(config_err(0, format!("range '{item}' needs 0 < lo <= hi"))),
            };
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| config_err(0, format!("range '{item}' has a bad count")))?;
            if count == 0 || count > MAX_POINTS || out.len() + count > MAX_POINTS {
                return Err(config_err(0, format!("range '{item}' count out of bounds")));
            }
            out.extend(log_space(lo, hi, count));
        } else {
            match parse_f64(item) {
                Some(v) if v >= 0.0 => out.push(v),
                _ => return Err(config_err(0, format!("rate '{item}' must be a non-negative number"))),
            }
            if out.len() > MAX_POINTS {
                return Err(config_err(0, "too many rates"));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

fn fmt_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_opt(v: Option<f64>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |v| v.to_string())
}

impl ExperimentConfig {
    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen = std::collections::HashSet::new();
        let mut ramp_fs: Option<f64> = None;
        let mut smooth = false;
        let mut edge_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(line_no, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(config_err(line_no, format!("duplicate key '{key}'")));
            }
            let err = |m: &str| config_err(line_no, format!("{key}: {m}"));
            let num = || parse_f64(value).ok_or_else(|| err("expected a finite number"));
            let num_or = |word: &str| -> Result<Option<f64>> {
                if value == word {
                    Ok(None)
                } else {
                    num().map(Some)
                }
            };
            let relocate = |e: Error| match e {
                Error::Config { message, .. } => config_err(line_no, format!("{key}: {message}")),
                other => other,
            };
            match key {
                "model.omega1" => c.model.omega1 = num()?,
                "model.omega2" => c.model.omega2 = num()?,
                "model.alpha" => c.model.alpha = num()?,
                "model.e_in" => c.model.e_in = num()?,
                "model.delta_e" => c.model.delta_e = num()?,
                "model.mass" => c.model.mass = num()?,
                "model.delta_x" => c.model.delta_x = num_or("calibrate")?,
                "model.target_delta" => c.model.target_delta = num_or("auto")?,
                "grid.n_points" => {
                    c.grid.n_points = value.parse().map_err(|_| err("expected an integer"))?
                }
                "grid.padding" => c.grid.padding = num_or("auto")?,
                "integrator.dt" => c.integrator.dt = num()?,
                "integrator.t_final" => c.integrator.t_final = num_or("auto")?,
                "schedule.preset" => {
                    let p = SchedulePreset::from_name(value).ok_or_else(|| err("unknown preset"))?;
                    if seen.contains("schedule.windows") {
                        return Err(err("give either a preset or windows, not both"));
                    }
                    c.schedule.source = ScheduleSource::Preset(p);
                }
                "schedule.windows" => {
                    if seen.contains("schedule.preset") {
                        return Err(err("give either a preset or windows, not both"));
                    }
                    c.schedule.source = ScheduleSource::Windows(parse_windows(value).map_err(relocate)?);
                }
                "schedule.edge" => {
                    smooth = match value {
                        "rectangular" => false,
                        "smooth" => true,
                        _ => return Err(err("expected 'rectangular' or 'smooth'")),
                    };
                    edge_line = line_no;
                }
                "schedule.ramp_fs" => ramp_fs = Some(num()?),
                "sweep.gammas" => c.gammas = parse_gamma_spec(value).map_err(relocate)?,
                "sinks.strength" => c.sinks.strength = num()?,
                "sinks.cis_onset_sigmas" => c.sinks.cis_onset_sigmas = num()?,
                "sinks.trans_onset_sigmas" => c.sinks.trans_onset_sigmas = num()?,
                "sinks.ramp_width" => c.sinks.ramp_width = num_or("auto")?,
                "engine.kind" => {
                    c.engine.kind = EngineKind::from_name(value).ok_or_else(|| err("expected 'dense' or 'mcwf'"))?
                }
                "engine.trajectories" => {
                    c.engine.trajectories = value.parse().map_err(|_| err("expected an integer"))?
                }
                "engine.seed" => c.engine.seed = value.parse().map_err(|_| err("expected an integer"))?,
                "output.dir" => c.output.dir = PathBuf::from(value),
                "output.record_wall_time" => {
                    c.output.record_wall_time = value.parse().map_err(|_| err("expected true or false"))?
                }
                _ => return Err(config_err(line_no, format!("unknown key '{key}'"))),
            }
        }
        c.schedule.edge = match (smooth, ramp_fs) {
            (true, Some(r)) => EdgeShape::Smooth { ramp_fs: r },
            (true, None) => EdgeShape::Smooth { ramp_fs: 5.0 },
            (false, None) => EdgeShape::Rectangular,
            (false, Some(_)) => {
                return Err(config_err(
                    edge_line,
                    "schedule.ramp_fs needs schedule.edge = smooth",
                ))
            }
        };
        c.validate()?;
        Ok(c)
    }

    /// Range checks that do not need the model to be built.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(config_err(0, m));
        if !(self.integrator.dt > 0.0) {
            return bad(format!("integrator.dt must be positive, got {}", self.integrator.dt));
        }
        if let Some(t) = self.integrator.t_final {
            if !(t > 0.0) {
                return bad(format!("integrator.t_final must be positive, got {t}"));
            }
        }
        if self.gammas.iter().any(|g| !(*g >= 0.0)) {
            return bad("sweep rates must be non-negative".into());
        }
        if self.engine.trajectories == 0 {
            return bad("engine.trajectories must be at least 1".into());
        }
        if let Some(p) = self.grid.padding {
            if !(p >= 0.0) {
                return bad(format!("grid.padding must be non-negative, got {p}"));
            }
        }
        if let EdgeShape::Smooth { ramp_fs } = self.schedule.edge {
            if !(ramp_fs > 0.0) {
                return bad(format!("schedule.ramp_fs must be positive, got {ramp_fs}"));
            }
        }
        // window sanity without a rate
        PulseSchedule::new(
            self.schedule
                .intervals()
                .into_iter()
                .map(|(a, b)| PulseWindow::new(a, b, 0.0))
                .collect(),
            self.schedule.edge,
        )
        .map_err(|e| config_err(0, e.to_string()))?;
        Ok(())
    }

    /// Writes every key, so that `parse(to_config_string())` reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("model.omega1", m.omega1.to_string());
        put("model.omega2", m.omega2.to_string());
        put("model.alpha", m.alpha.to_string());
        put("model.e_in", m.e_in.to_string());
        put("model.delta_e", m.delta_e.to_string());
        put("model.mass", m.mass.to_string());
        put("model.delta_x", fmt_opt(m.delta_x, "calibrate"));
        put("model.target_delta", fmt_opt(m.target_delta, "auto"));
        put("grid.n_points", self.grid.n_points.to_string());
        put("grid.padding", fmt_opt(self.grid.padding, "auto"));
        put("integrator.dt", self.integrator.dt.to_string());
        put("integrator.t_final", fmt_opt(self.integrator.t_final, "auto"));
        match &self.schedule.source {
            ScheduleSource::Preset(p) => put("schedule.preset", p.name().to_string()),
            ScheduleSource::Windows(w) => put(
                "schedule.windows",
                w.iter()
                    .map(|(a, b)| format!("{a}:{b}"))
                    .collect::<Vec<_>>()
                    .join(", "),
            ),
        }
        match self.schedule.edge {
            EdgeShape::Rectangular => put("schedule.edge", "rectangular".into()),
            EdgeShape::Smooth { ramp_fs } => {
                put("schedule.edge", "smooth".into());
                put("schedule.ramp_fs", ramp_fs.to_string());
            }
        }
        put("sweep.gammas", fmt_list(&self.gammas));
        put("sinks.strength", self.sinks.strength.to_string());
        put("sinks.cis_onset_sigmas", self.sinks.cis_onset_sigmas.to_string());
        put("sinks.trans_onset_sigmas", self.sinks.trans_onset_sigmas.to_string());
        put("sinks.ramp_width", fmt_opt(self.sinks.ramp_width, "auto"));
        put("engine.kind", self.engine.kind.name().into());
        put("engine.trajectories", self.engine.trajectories.to_string());
        put("engine.seed", self.engine.seed.to_string());
        put("output.dir", self.output.dir.display().to_string());
        put("output.record_wall_time", self.output.record_wall_time.to_string());
        s
    }
}
