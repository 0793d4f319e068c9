//! Complex absorbing potentials at the well minima and the ledger of what
//! they remove.
//!
//! The cis sink sits on surface 1 left of the initial packet, the trans sink
//! on surface 2 beyond the crossing. Both ramp quadratically from their onset
//! to the nearest grid edge and saturate at strength `η`.

use crate::error::{Error, Result};
use crate::model::{locate_crossing, Grid, ModelParams, Wavefunction};
use crate::wavepacket::PureSplit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SinkLabel {
    Cis,
    Trans,
}

impl SinkLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SinkLabel::Cis => "cis",
            SinkLabel::Trans => "trans",
        }
    }
}

/// Electronic surface, 1 (ground) or 2 (excited).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Ground,
    Excited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sink {
    pub label: SinkLabel,
    pub surface: Surface,
    /// Absorbing strength `W(x_i) ≥ 0`, fs⁻¹.
    pub profile: Vec<f64>,
}

impl Sink {
    pub fn new(label: SinkLabel, surface: Surface, profile: Vec<f64>) -> Result<Self> {
        if profile.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "{} sink profile must be finite and non-negative",
                label.as_str()
            )));
        }
        Ok(Self {
            label,
            surface,
            profile,
        })
    }

    /// Indices where the profile is nonzero.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.profile
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }
}

/// Geometry of the default sink pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkConfig {
    /// Saturation strength η, fs⁻¹.
    pub strength: f64,
    /// Cis onset, in initial-packet widths left of x = 0.
    pub cis_onset_sigmas: f64,
    /// Trans onset, in initial-packet widths right of the crossing.
    pub trans_onset_sigmas: f64,
    /// Ramp length; `None` ramps all the way to the grid edge.
    pub ramp_width: Option<f64>,
}

impl Default for SinkConfig {
    fn default() -> Self {
        Self {
            strength: 1.0,
            cis_onset_sigmas: 2.5,
            trans_onset_sigmas: 4.0,
            ramp_width: None,
        }
    }
}

/// `η · min(1, (depth/w)²)` for `depth ≥ 0`, else 0.
fn ramp(depth: f64, width: f64, strength: f64) -> f64 {
    if depth <= 0.0 {
        0.0
    } else {
        strength * (depth / width).powi(2).min(1.0)
    }
}

/// Builds the cis and trans sinks for `params` on `grid`.
pub fn build_sinks(params: &ModelParams, grid: &Grid, config: &SinkConfig) -> Result<Vec<Sink>> {
    build_sinks_scaled(params, grid, config, 1.0)
}

/// As [`build_sinks`], with both ramp lengths multiplied by `ramp_scale`.
pub fn build_sinks_scaled(
    params: &ModelParams,
    grid: &Grid,
    config: &SinkConfig,
    ramp_scale: f64,
) -> Result<Vec<Sink>> {
    if !(ramp_scale > 0.0 && ramp_scale.is_finite()) {
        return Err(Error::InvalidParams("ramp scale must be positive".into()));
    }
    if !(config.strength >= 0.0 && config.strength.is_finite()) {
        return Err(Error::InvalidParams("sink strength must be non-negative".into()));
    }
    if let Some(w) = config.ramp_width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParams("sink ramp width must be positive".into()));
        }
    }
    let crossing = locate_crossing(params)?;
    let sigma0 = params.sigma0();
    let cis_on = -config.cis_onset_sigmas * sigma0;
    let trans_on = crossing.x_c + config.trans_onset_sigmas * sigma0;
    let x_last = grid.x[grid.n_points - 1];
    if cis_on <= grid.x_min || trans_on >= x_last {
        return Err(Error::InvalidGrid(format!(
            "sink onsets {cis_on:.3}, {trans_on:.3} fall outside the grid"
        )));
    }
    let cis_w = ramp_scale * config.ramp_width.unwrap_or(cis_on - grid.x_min);
    let trans_w = ramp_scale * config.ramp_width.unwrap_or(x_last - trans_on);
    let cis = grid
        .x
        .iter()
        .map(|&x| ramp(cis_on - x, cis_w, config.strength))
        .collect();
    let trans = grid
        .x
        .iter()
        .map(|&x| ramp(x - trans_on, trans_w, config.strength))
        .collect();
    Ok(vec![
        Sink::new(SinkLabel::Cis, Surface::Ground, cis)?,
        Sink::new(SinkLabel::Trans, Surface::Excited, trans)?,
    ])
}

pub fn default_sinks(params: &ModelParams, grid: &Grid) -> Result<Vec<Sink>> {
    build_sinks(params, grid, &SinkConfig::default())
}

/// Fraction of a test packet left on the grid after it has run into `sink`.
///
/// The packet moves on the sink's surface alone (coupling switched off) with
/// the largest energy available in the model: released at rest from the
/// Franck-Condon point on surface 2, or from the equal-energy turning point on
/// surface 1. It is followed for one vibrational period, long enough to come
/// back if reflected. A well-behaved sink leaves less than 1%.
pub fn reflection_check(params: &ModelParams, grid: &Grid, sink: &Sink) -> Result<f64> {
    let decoupled = ModelParams {
        alpha: 0.0,
        ..*params
    };
    let h = crate::model::build_hamiltonian(&decoupled, grid)?;
    let energy = params.franck_condon_energy();
    let (x0, omega) = match sink.surface {
        Surface::Excited => (0.0, params.omega2),
        Surface::Ground => {
            let turning = (2.0 * energy / params.mass).sqrt() / params.omega1;
            // the turning point on the side facing away from the sink
            let side = if sink_centroid(sink, grid) < 0.0 { 1.0 } else { -1.0 };
            (side * turning, params.omega1)
        }
    };
    let width = params.mass * params.omega1;
    let prefactor = (width / std::f64::consts::PI).powf(0.25) * grid.dx.sqrt();
    let mut psi = Wavefunction::zeros(grid.n_points);
    let target = match sink.surface {
        Surface::Ground => &mut psi.surface1,
        Surface::Excited => &mut psi.surface2,
    };
    for (c, &x) in target.iter_mut().zip(&grid.x) {
        c.re = prefactor * (-0.5 * width * (x - x0).powi(2)).exp();
    }
    let norm = psi.norm_sqr();
    psi.scale(1.0 / norm.sqrt());

    let dt = 0.2;
    let stepper = PureSplit::new(&h, std::slice::from_ref(sink), dt);
    let steps = (2.0 * std::f64::consts::PI / omega / dt).ceil() as usize;
    for _ in 0..steps {
        stepper.step(&mut psi);
    }
    Ok(psi.norm_sqr())
}

fn sink_centroid(sink: &Sink, grid: &Grid) -> f64 {
    let (mut wx, mut w) = (0.0, 0.0);
    for (p, x) in sink.profile.iter().zip(&grid.x) {
        wx += p * x;
        w += p;
    }
    if w > 0.0 {
        wx / w
    } else {
        0.0
    }
}

/// Cumulative absorbed probability per sink.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SinkLedger {
    pub absorbed_cis: f64,
    pub absorbed_trans: f64,
    pub history: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub time: f64,
    pub absorbed_cis: f64,
    pub absorbed_trans: f64,
}

impl SinkLedger {
    pub fn total(&self) -> f64 {
        self.absorbed_cis + self.absorbed_trans
    }

    pub(crate) fn book(&mut self, cis: f64, trans: f64) {
        self.absorbed_cis += cis;
        self.absorbed_trans += trans;
    }

    pub(crate) fn snapshot(&mut self, time: f64) {
        self.history.push(LedgerEntry {
            time,
            absorbed_cis: self.absorbed_cis,
            absorbed_trans: self.absorbed_trans,
        });
    }
}

/// Per-point absorbing strengths, summed per surface and per label.
#[derive(Debug, Clone)]
pub(crate) struct SinkMap {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    cis1: Vec<f64>,
    cis2: Vec<f64>,
    trans1: Vec<f64>,
    trans2: Vec<f64>,
    pub active: Vec<bool>,
}

impl SinkMap {
    pub fn new(n: usize, sinks: &[Sink]) -> Self {
        let mut map = Self {
            w1: vec![0.0; n],
            w2: vec![0.0; n],
            cis1: vec![0.0; n],
            cis2: vec![0.0; n],
            trans1: vec![0.0; n],
            trans2: vec![0.0; n],
            active: vec![false; n],
        };
        for sink in sinks {
            let slot = match (sink.label, sink.surface) {
                (SinkLabel::Cis, Surface::Ground) => &mut map.cis1,
                (SinkLabel::Cis, Surface::Excited) => &mut map.cis2,
                (SinkLabel::Trans, Surface::Ground) => &mut map.trans1,
                (SinkLabel::Trans, Surface::Excited) => &mut map.trans2,
            };
            for (s, w) in slot.iter_mut().zip(&sink.profile) {
                *s += w;
            }
        }
        for i in 0..n {
            map.w1[i] = map.cis1[i] + map.trans1[i];
            map.w2[i] = map.cis2[i] + map.trans2[i];
            map.active[i] = map.w1[i] > 0.0 || map.w2[i] > 0.0;
        }
        map
    }

    /// Splits a local population drop between the sinks in proportion to
    /// their instantaneous absorption rates. Exact when only one label is
    /// present at the point.
    pub fn split(&self, i: usize, pop1: f64, pop2: f64, drop: f64) -> (f64, f64) {
        let cis = self.cis1[i] * pop1 + self.cis2[i] * pop2;
        let trans = self.trans1[i] * pop1 + self.trans2[i] * pop2;
        if cis == 0.0 && trans == 0.0 {
            if self.trans1[i] + self.trans2[i] > 0.0 {
                return (0.0, drop);
            }
            return (drop, 0.0);
        }
        let f = cis / (cis + trans);
        (drop * f, drop * (1.0 - f))
    }
}
