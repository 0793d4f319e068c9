//! Time-gated measurement rate γ(t).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Edge profile shared by all windows of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeShape {
    Rectangular,
    /// Raised-cosine ramps of total length `ramp_fs`, centred on each
    /// nominal edge so the rate is at half height there.
    Smooth { ramp_fs: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseWindow {
    pub t_on: f64,
    pub t_off: f64,
    pub gamma: f64,
}

impl PulseWindow {
    pub fn new(t_on: f64, t_off: f64, gamma: f64) -> Self {
        Self { t_on, t_off, gamma }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    windows: Vec<PulseWindow>,
    edge: EdgeShape,
}

impl Default for PulseSchedule {
    fn default() -> Self {
        Self::empty()
    }
}

impl PulseSchedule {
    /// Validates and stores `windows`; they must be sorted and disjoint
    /// (touching edges are allowed).
    pub fn new(windows: Vec<PulseWindow>, edge: EdgeShape) -> Result<Self> {
        if let EdgeShape::Smooth { ramp_fs } = edge {
            if !(ramp_fs > 0.0 && ramp_fs.is_finite()) {
                return Err(Error::InvalidSchedule(format!(
                    "ramp length must be positive, got {ramp_fs}"
                )));
            }
        }
        for w in &windows {
            if !(w.t_on.is_finite() && w.t_off.is_finite() && w.t_on < w.t_off) {
                return Err(Error::InvalidSchedule(format!(
                    "window [{}, {}] needs t_on < t_off",
                    w.t_on, w.t_off
                )));
            }
            if !(w.gamma >= 0.0 && w.gamma.is_finite()) {
                return Err(Error::InvalidSchedule(format!(
                    "window rate must be finite and non-negative, got {}",
                    w.gamma
                )));
            }
        }
        for pair in windows.windows(2) {
            if pair[1].t_on < pair[0].t_off {
                return Err(Error::InvalidSchedule(format!(
                    "windows [{}, {}] and [{}, {}] overlap or are unsorted",
                    pair[0].t_on, pair[0].t_off, pair[1].t_on, pair[1].t_off
                )));
            }
        }
        Ok(Self { windows, edge })
    }

    pub fn empty() -> Self {
        Self {
            windows: Vec::new(),
            edge: EdgeShape::Rectangular,
        }
    }

    pub fn windows(&self) -> &[PulseWindow] {
        &self.windows
    }

    pub fn edge(&self) -> EdgeShape {
        self.edge
    }

    pub fn with_edge(mut self, edge: EdgeShape) -> Result<Self> {
        self.edge = edge;
        Self::new(self.windows, edge)
    }

    pub fn max_gamma(&self) -> f64 {
        self.windows.iter().map(|w| w.gamma).fold(0.0, f64::max)
    }

    /// Earliest and latest times at which the rate can be nonzero.
    pub fn support(&self) -> Option<(f64, f64)> {
        let half = match self.edge {
            EdgeShape::Rectangular => 0.0,
            EdgeShape::Smooth { ramp_fs } => 0.5 * ramp_fs,
        };
        let first = self.windows.first()?;
        let last = self.windows.last()?;
        Some((first.t_on - half, last.t_off + half))
    }

    /// Fails with [`Error::ScheduleOutOfRange`] if a window ends after `t_final`.
    pub fn check_horizon(&self, t_final: f64) -> Result<()> {
        match self.windows.iter().find(|w| w.t_off > t_final) {
            Some(w) => Err(Error::ScheduleOutOfRange {
                t_on: w.t_on,
                t_off: w.t_off,
                t_final,
            }),
            None => Ok(()),
        }
    }

    /// Largest rate reached anywhere in `[t0, t1]`.
    pub fn max_gamma_between(&self, t0: f64, t1: f64) -> f64 {
        let half = match self.edge {
            EdgeShape::Rectangular => 0.0,
            EdgeShape::Smooth { ramp_fs } => 0.5 * ramp_fs,
        };
        self.windows
            .iter()
            .filter(|w| w.t_on - half < t1 && w.t_off + half > t0)
            .map(|w| w.gamma)
            .fold(0.0, f64::max)
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        match self.edge {
            EdgeShape::Rectangular => self
                .windows
                .iter()
                .find(|w| t >= w.t_on && t < w.t_off)
                .map_or(0.0, |w| w.gamma),
            EdgeShape::Smooth { ramp_fs } => self
                .windows
                .iter()
                .map(|w| {
                    let rise = raised_cosine((t - w.t_on) / ramp_fs);
                    let fall = raised_cosine((w.t_off - t) / ramp_fs);
                    w.gamma * rise.min(fall)
                })
                .fold(0.0, f64::max),
        }
    }
}

/// 0 below −½, 1 above ½, a half cosine in between.
fn raised_cosine(u: f64) -> f64 {
    if u <= -0.5 {
        0.0
    } else if u >= 0.5 {
        1.0
    } else {
        0.5 * (1.0 + (PI * u).sin())
    }
}

/// Named schedules used by the figure sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulePreset {
    /// γ on throughout the first 200 fs.
    Continuous200fs,
    /// One window around the first arrival at the crossing.
    PulsedSingleTransit,
    /// One window around each of the first four crossing arrivals.
    PulsedFull,
}

impl SchedulePreset {
    pub const ALL: [SchedulePreset; 3] = [
        SchedulePreset::Continuous200fs,
        SchedulePreset::PulsedSingleTransit,
        SchedulePreset::PulsedFull,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchedulePreset::Continuous200fs => "continuous_200fs",
            SchedulePreset::PulsedSingleTransit => "pulsed_single_transit",
            SchedulePreset::PulsedFull => "pulsed_full",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn intervals(&self) -> &'static [(f64, f64)] {
        match self {
            SchedulePreset::Continuous200fs => &[(0.0, 200.0)],
            SchedulePreset::PulsedSingleTransit => &[(90.0, 120.0)],
            SchedulePreset::PulsedFull => &[
                (90.0, 120.0),
                (390.0, 420.0),
                (670.0, 700.0),
                (960.0, 990.0),
            ],
        }
    }

    pub fn schedule(&self, gamma: f64, edge: EdgeShape) -> Result<PulseSchedule> {
        let windows = self
            .intervals()
            .iter()
            .map(|&(a, b)| PulseWindow::new(a, b, gamma))
            .collect();
        PulseSchedule::new(windows, edge)
    }
}

/// Measurement rate from the photon current driving the excited-state
/// absorption: half the absorption rate, `½ · current · cross_section`.
pub fn photon_flux_to_rate(photon_current: f64, cross_section: f64) -> Result<f64> {
    if !(photon_current >= 0.0 && cross_section >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "photon current and cross section must be non-negative, got {photon_current}, {cross_section}"
        )));
    }
    Ok(0.5 * photon_current * cross_section)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_values() {
        let s = PulseSchedule::new(vec![PulseWindow::new(90.0, 120.0, 2.0)], EdgeShape::Rectangular)
            .unwrap();
        assert_eq!(s.gamma_at(100.0), 2.0);
        assert_eq!(s.gamma_at(150.0), 0.0);
        assert_eq!(s.gamma_at(89.999), 0.0);
    }

    #[test]
    fn smooth_half_height_at_edges() {
        let s = PulseSchedule::new(
            vec![PulseWindow::new(90.0, 120.0, 2.0)],
            EdgeShape::Smooth { ramp_fs: 5.0 },
        )
        .unwrap();
        assert!((s.gamma_at(90.0) - 1.0).abs() < 1e-12);
        assert!((s.gamma_at(120.0) - 1.0).abs() < 1e-12);
        assert_eq!(s.gamma_at(87.5), 0.0);
        assert_eq!(s.gamma_at(105.0), 2.0);
        assert_eq!(s.gamma_at(122.5), 0.0);
    }

    #[test]
    fn smooth_is_continuous() {
        let s = SchedulePreset::PulsedFull
            .schedule(2.0, EdgeShape::Smooth { ramp_fs: 5.0 })
            .unwrap();
        let mut prev = s.gamma_at(0.0);
        for k in 1..200_000 {
            let g = s.gamma_at(k as f64 * 0.005);
            assert!((g - prev).abs() < 0.01);
            prev = g;
        }
    }

    #[test]
    fn empty_schedule_is_zero() {
        let s = PulseSchedule::empty();
        for t in [-1.0, 0.0, 100.0, 1e6] {
            assert_eq!(s.gamma_at(t), 0.0);
        }
        assert_eq!(s.support(), None);
    }

    #[test]
    fn presets_expand_to_literal_windows() {
        let full = SchedulePreset::PulsedFull.schedule(2.0, EdgeShape::Rectangular).unwrap();
        let got: Vec<(f64, f64, f64)> = full
            .windows()
            .iter()
            .map(|w| (w.t_on, w.t_off, w.gamma))
            .collect();
        assert_eq!(
            got,
            vec![
                (90.0, 120.0, 2.0),
                (390.0, 420.0, 2.0),
                (670.0, 700.0, 2.0),
                (960.0, 990.0, 2.0)
            ]
        );
        let single = SchedulePreset::PulsedSingleTransit
            .schedule(3.0, EdgeShape::Rectangular)
            .unwrap();
        assert_eq!(single.windows(), &[PulseWindow::new(90.0, 120.0, 3.0)]);
        let cont = SchedulePreset::Continuous200fs
            .schedule(1.0, EdgeShape::Rectangular)
            .unwrap();
        assert_eq!(cont.windows(), &[PulseWindow::new(0.0, 200.0, 1.0)]);
    }

    #[test]
    fn invalid_windows_rejected() {
        let overlap = vec![PulseWindow::new(0.0, 10.0, 1.0), PulseWindow::new(5.0, 20.0, 1.0)];
        assert!(PulseSchedule::new(overlap, EdgeShape::Rectangular).is_err());
        let reversed = vec![PulseWindow::new(10.0, 5.0, 1.0)];
        assert!(PulseSchedule::new(reversed, EdgeShape::Rectangular).is_err());
        let negative = vec![PulseWindow::new(0.0, 5.0, -1.0)];
        assert!(PulseSchedule::new(negative, EdgeShape::Rectangular).is_err());
    }

    #[test]
    fn horizon_check() {
        let s = SchedulePreset::PulsedFull.schedule(1.0, EdgeShape::Rectangular).unwrap();
        assert!(s.check_horizon(1100.0).is_ok());
        assert!(matches!(
            s.check_horizon(500.0),
            Err(Error::ScheduleOutOfRange { .. })
        ));
    }

    #[test]
    fn flux_to_rate() {
        assert_eq!(photon_flux_to_rate(4.0, 1.0).unwrap(), 2.0);
        assert_eq!(photon_flux_to_rate(0.0, 7.3).unwrap(), 0.0);
        assert_eq!(photon_flux_to_rate(200.0, 1.0).unwrap(), 100.0);
        assert!(photon_flux_to_rate(-1.0, 1.0).is_err());
    }
}
