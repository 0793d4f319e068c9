//! Two coupled harmonic surfaces along the isomerization coordinate.
//!
//! Units throughout: ħ = 1, time in fs, energies as angular frequencies in
//! fs⁻¹, and a dimensionless coordinate `x`. The mass defaults to 1; any
//! other value only rescales `x` by `1/√m`.
//!
//! Surface 1 is the electronic ground state with its minimum at `x = 0`
//! (11-cis); surface 2 is the first excited state with its minimum at
//! `x = Δx` (all-trans side), offset by `ΔE`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{momentum_lattice, Spectral};

/// Speed of light in nm/fs.
pub const SPEED_OF_LIGHT_NM_PER_FS: f64 = 299.792_458;

/// Excitation wavelength of the initial photon, nm.
pub const EXCITATION_WAVELENGTH_NM: f64 = 500.0;

/// Proportionality between the adiabaticity parameter and α² (fs²).
pub const DELTA_PER_ALPHA_SQ: f64 = 11.5;

/// Physical constants of the two-surface model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Ground-surface angular frequency, fs⁻¹.
    pub omega1: f64,
    /// Excited-surface angular frequency, fs⁻¹.
    pub omega2: f64,
    /// Electronic coupling, fs⁻¹.
    pub alpha: f64,
    /// Excitation energy over ħ, fs⁻¹.
    pub e_in: f64,
    /// Energy offset of the excited surface minimum, fs⁻¹.
    pub delta_e: f64,
    /// Coordinate offset of the excited surface minimum.
    pub delta_x: f64,
    pub mass: f64,
}

impl Default for ModelParams {
    /// Literature constants. `delta_x` is a first guess that places the
    /// vertical excitation at `e_in`; use [`calibrate_offset`] (or
    /// [`ModelParams::calibrated`]) to fix it from the adiabaticity parameter.
    fn default() -> Self {
        let omega2 = 2.0 * PI / 600.0;
        let e_in = 2.0 * PI * SPEED_OF_LIGHT_NM_PER_FS / EXCITATION_WAVELENGTH_NM;
        let delta_e = 0.6 * e_in;
        Self {
            omega1: 2.0 * PI / 300.0,
            omega2,
            alpha: 0.1,
            e_in,
            delta_e,
            delta_x: (2.0 * (e_in - delta_e)).sqrt() / omega2,
            mass: 1.0,
        }
    }
}

impl ModelParams {
    /// Defaults with `delta_x` calibrated to `δ = 11.5 α²`.
    pub fn calibrated() -> Result<Self> {
        let p = Self::default();
        calibrate_offset(&p, p.target_delta())
    }

    /// The adiabaticity parameter this coupling should produce, `11.5 α²`.
    pub fn target_delta(&self) -> f64 {
        DELTA_PER_ALPHA_SQ * self.alpha * self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega1,
            self.omega2,
            self.alpha,
            self.e_in,
            self.delta_e,
            self.delta_x,
            self.mass,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite value".into()));
        }
        if self.omega1 <= 0.0 || self.omega2 <= 0.0 {
            return Err(Error::InvalidParams("frequencies must be positive".into()));
        }
        if self.alpha < 0.0 || self.delta_e < 0.0 || self.e_in < 0.0 {
            return Err(Error::InvalidParams(
                "alpha, delta_e and e_in must be non-negative".into(),
            ));
        }
        if self.delta_x <= 0.0 || self.mass <= 0.0 {
            return Err(Error::InvalidParams(
                "delta_x and mass must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Position spread of the initial packet, `√(ħ/(2mω₁))`.
    pub fn sigma0(&self) -> f64 {
        (0.5 / (self.mass * self.omega1)).sqrt()
    }

    /// Position spread of the excited-surface vibrational ground state.
    pub fn sigma_trans(&self) -> f64 {
        (0.5 / (self.mass * self.omega2)).sqrt()
    }

    pub fn v1(&self, x: f64) -> f64 {
        0.5 * self.mass * self.omega1 * self.omega1 * x * x
    }

    pub fn v2(&self, x: f64) -> f64 {
        let d = x - self.delta_x;
        self.delta_e + 0.5 * self.mass * self.omega2 * self.omega2 * d * d
    }

    /// Classical energy of a particle released at rest at `x = 0` on surface 2.
    pub fn franck_condon_energy(&self) -> f64 {
        self.v2(0.0)
    }
}

/// Ω = √(E_in² + α²), the fastest coherent timescale right after excitation.
pub fn rabi_frequency(params: &ModelParams) -> f64 {
    params.e_in.hypot(params.alpha)
}

/// Uniform periodic discretization of the isomerization coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    /// Conjugate momenta in FFT order.
    pub k_values: Vec<f64>,
}

impl Grid {
    /// Grid with `n_points` nodes `x_min + i·dx`, `dx = (x_max − x_min)/n_points`.
    /// The point `x_max` itself is the periodic image of `x_min`.
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 64 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 64, got {n_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "empty or non-finite domain [{x_min}, {x_max}]"
            )));
        }
        let dx = (x_max - x_min) / n_points as f64;
        let x = (0..n_points).map(|i| x_min + i as f64 * dx).collect();
        Ok(Self {
            n_points,
            x_min,
            x_max,
            dx,
            x,
            k_values: momentum_lattice(n_points, dx),
        })
    }

    /// Largest resolvable momentum, π/dx.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Index of the node closest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round();
        i.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

/// Builds the grid over `[−4σ₀ − padding, Δx + 4σ_trans + padding]`.
///
/// Fails with [`Error::DomainTooSmall`] when `π/dx` cannot hold the fastest
/// classical momentum of the model plus four momentum widths of the initial
/// packet.
pub fn build_grid(params: &ModelParams, n_points: usize, padding: f64) -> Result<Grid> {
    params.validate()?;
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "padding must be finite and non-negative, got {padding}"
        )));
    }
    let lo = -4.0 * params.sigma0() - padding;
    let hi = params.delta_x + 4.0 * params.sigma_trans() + padding;
    let grid = Grid::new(n_points, lo, hi)?;
    let k_needed = required_momentum(params);
    if grid.k_max() < k_needed {
        return Err(Error::DomainTooSmall {
            k_max: grid.k_max(),
            k_needed,
        });
    }
    Ok(grid)
}

/// Default padding used by the experiments: three initial packet widths.
pub fn default_padding(params: &ModelParams) -> f64 {
    3.0 * params.sigma0()
}

fn required_momentum(params: &ModelParams) -> f64 {
    // The lowest potential value is 0 (bottom of surface 1).
    let k_classical = (2.0 * params.mass * params.franck_condon_energy()).sqrt();
    let sigma_k = 0.5 / params.sigma0();
    k_classical + 4.0 * sigma_k
}

/// Wavefunction over grid ⊗ {|1⟩, |2⟩}.
///
/// Entries are discrete amplitudes `√dx · ψ(x_i)`, so the norm is a plain sum
/// of squared moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub surface1: Vec<Complex64>,
    pub surface2: Vec<Complex64>,
}

impl Wavefunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            surface1: vec![Complex64::default(); n],
            surface2: vec![Complex64::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.surface1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surface1.is_empty()
    }

    pub fn populations(&self) -> (f64, f64) {
        (
            self.surface1.iter().map(|c| c.norm_sqr()).sum(),
            self.surface2.iter().map(|c| c.norm_sqr()).sum(),
        )
    }

    pub fn norm_sqr(&self) -> f64 {
        let (p1, p2) = self.populations();
        p1 + p2
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.surface1
            .iter()
            .zip(&other.surface1)
            .chain(self.surface2.iter().zip(&other.surface2))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.surface1.iter_mut().chain(self.surface2.iter_mut()) {
            *c *= factor;
        }
    }
}

/// Discretized Hamiltonian. The kinetic term is diagonal in momentum space.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    /// `k²/(2m)` in FFT order.
    pub kinetic_spectrum: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Off-diagonal electronic element α·ħ.
    pub coupling: f64,
    pub grid: Grid,
    spectral: Spectral,
}

/// Diagonal potentials on the grid plus the spectral kinetic operator.
pub fn build_hamiltonian(params: &ModelParams, grid: &Grid) -> Result<Hamiltonian> {
    params.validate()?;
    let kinetic_spectrum = grid
        .k_values
        .iter()
        .map(|k| k * k / (2.0 * params.mass))
        .collect();
    Ok(Hamiltonian {
        kinetic_spectrum,
        v1: grid.x.iter().map(|&x| params.v1(x)).collect(),
        v2: grid.x.iter().map(|&x| params.v2(x)).collect(),
        coupling: params.alpha,
        grid: grid.clone(),
        spectral: Spectral::new(grid.n_points),
    })
}

impl Hamiltonian {
    pub fn n_points(&self) -> usize {
        self.grid.n_points
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `H ψ`.
    pub fn apply(&self, psi: &Wavefunction) -> Wavefunction {
        let mut t1 = psi.surface1.clone();
        let mut t2 = psi.surface2.clone();
        self.spectral.apply_real_diagonal(&mut t1, &self.kinetic_spectrum);
        self.spectral.apply_real_diagonal(&mut t2, &self.kinetic_spectrum);
        let a = self.coupling;
        for i in 0..self.n_points() {
            let (c1, c2) = (psi.surface1[i], psi.surface2[i]);
            t1[i] += self.v1[i] * c1 + a * c2;
            t2[i] += a * c1 + self.v2[i] * c2;
        }
        Wavefunction {
            surface1: t1,
            surface2: t2,
        }
    }

    /// ⟨ψ|H|ψ⟩ for a (not necessarily normalized) state.
    pub fn expectation(&self, psi: &Wavefunction) -> f64 {
        psi.inner(&self.apply(psi)).re
    }
}

/// Franck-Condon packet: the surface-1 vibrational ground state promoted to
/// surface 2, normalized on the grid.
pub fn initial_state(params: &ModelParams, grid: &Grid) -> Result<Wavefunction> {
    params.validate()?;
    let width = params.mass * params.omega1;
    let prefactor = (width / PI).powf(0.25) * grid.dx.sqrt();
    let mut psi = Wavefunction::zeros(grid.n_points);
    for (c, &x) in psi.surface2.iter_mut().zip(&grid.x) {
        *c = Complex64::new(prefactor * (-0.5 * width * x * x).exp(), 0.0);
    }
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NormalizationFailure { norm });
    }
    Ok(psi)
}

/// Geometry of the diabatic crossing met by the packet on its way to Δx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingInfo {
    pub x_c: f64,
    /// Classical speed at `x_c` of a particle released at rest at x = 0 on surface 2.
    pub v_c: f64,
    /// |dV₁/dx − dV₂/dx| at `x_c`.
    pub slope_diff: f64,
    /// Landau-Zener adiabaticity parameter α²/(v_c · slope_diff).
    pub delta: f64,
    /// First arrival time at `x_c` along the surface-2 harmonic trajectory, fs.
    pub arrival_time: f64,
}

/// Locates the first diabatic crossing `v1(x) = v2(x)` in `(0, Δx)`.
pub fn locate_crossing(params: &ModelParams) -> Result<CrossingInfo> {
    params.validate()?;
    let m = params.mass;
    let (w1, w2, dx) = (params.omega1, params.omega2, params.delta_x);
    // v1 − v2 = a x² + b x + c
    let a = 0.5 * m * (w1 * w1 - w2 * w2);
    let b = m * w2 * w2 * dx;
    let c = -params.delta_e - 0.5 * m * w2 * w2 * dx * dx;

    let roots: Vec<f64> = if a.abs() <= 1e-14 * b.abs() {
        vec![-c / b]
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            // Cancellation-free quadratic roots.
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            vec![q / a, c / q]
        }
    };
    let x_c = roots
        .into_iter()
        .filter(|r| r.is_finite() && *r > 0.0 && *r < dx)
        .fold(f64::INFINITY, f64::min);
    if !x_c.is_finite() {
        return Err(Error::NoCrossing { delta_x: dx });
    }

    let kinetic = params.v2(0.0) - params.v2(x_c);
    let v_c = (2.0 * kinetic / m).sqrt();
    let slope_diff = (m * w1 * w1 * x_c - m * w2 * w2 * (x_c - dx)).abs();
    let delta = params.alpha * params.alpha / (v_c * slope_diff);
    // x(t) = Δx (1 − cos ω₂ t) on surface 2
    let arrival_time = (1.0 - x_c / dx).clamp(-1.0, 1.0).acos() / w2;
    Ok(CrossingInfo {
        x_c,
        v_c,
        slope_diff,
        delta,
        arrival_time,
    })
}

/// Returns `params` with `delta_x` chosen so that [`locate_crossing`] yields
/// `target_delta`.
///
/// δ(Δx) decreases monotonically from its value at the smallest offset that
/// still produces a crossing, `Δx_min = √(2ΔE/m)/ω₁`, towards zero; the root is
/// searched on `[Δx_min (1 + 10⁻⁹), 10⁴ Δx_min]` (or `[10⁻⁶, 10⁴]` when ΔE = 0).
pub fn calibrate_offset(params: &ModelParams, target_delta: f64) -> Result<ModelParams> {
    if !(target_delta > 0.0 && target_delta.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "target delta must be positive, got {target_delta}"
        )));
    }
    let mut probe = *params;
    probe.delta_x = 1.0;
    probe.validate()?;

    let dx_min = (2.0 * params.delta_e / params.mass).sqrt() / params.omega1;
    let (lo, hi) = if dx_min > 0.0 {
        (dx_min * (1.0 + 1e-9), dx_min * 1e4)
    } else {
        (1e-6, 1e4)
    };
    let delta_at = |dx: f64| -> f64 {
        let mut p = *params;
        p.delta_x = dx;
        locate_crossing(&p).map(|c| c.delta).unwrap_or(f64::NAN)
    };
    let (delta_lo, delta_hi) = (delta_at(lo), delta_at(hi));
    let fail = || Error::CalibrationFailure {
        target: target_delta,
        lo,
        hi,
        delta_lo,
        delta_hi,
    };
    if !(delta_lo.is_finite() && delta_hi.is_finite()) {
        return Err(fail());
    }
    let f = |dx: f64| delta_at(dx) / target_delta - 1.0;
    let (f_lo, f_hi) = (delta_lo / target_delta - 1.0, delta_hi / target_delta - 1.0);
    if f_lo * f_hi > 0.0 {
        return Err(fail());
    }
    let root = brent(f, lo, hi, f_lo, f_hi, 1e-13).ok_or_else(fail)?;
    let mut out = *params;
    out.delta_x = root;
    Ok(out)
}

/// Brent's bracketed root finder. `fa`, `fb` are `f(a)`, `f(b)` with opposite signs.
pub(crate) fn brent<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    rel_tol: f64,
) -> Option<f64> {
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn calibrated() -> ModelParams {
        ModelParams::calibrated().unwrap()
    }

    #[test]
    fn defaults_match_literature_constants() {
        let p = ModelParams::default();
        assert_relative_eq!(p.omega1, 2.0 * PI / 300.0);
        assert_relative_eq!(p.omega2, 2.0 * PI / 600.0);
        assert_relative_eq!(p.e_in, 3.7673, epsilon = 1e-4);
        assert_relative_eq!(p.delta_e, 0.6 * p.e_in);
        assert_relative_eq!(p.delta_e, 2.2604, epsilon = 1e-4);
    }

    #[test]
    fn rabi_frequency_cases() {
        let p = ModelParams::default();
        assert_relative_eq!(rabi_frequency(&p), 3.7687, epsilon = 1e-3);
        let q = ModelParams { e_in: 0.0, alpha: 1.0, ..p };
        assert_relative_eq!(rabi_frequency(&q), 1.0);
        let r = ModelParams { e_in: 3.0, alpha: 4.0, ..p };
        assert_relative_eq!(rabi_frequency(&r), 5.0);
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        let p = calibrated();
        assert!(matches!(build_grid(&p, 63, 2.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(&p, 32, 2.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_spacing_and_coverage() {
        let p = calibrated();
        let g = build_grid(&p, 512, 2.0).unwrap();
        assert_relative_eq!(g.dx, (g.x_max - g.x_min) / 512.0);
        assert!(g.x_min <= -4.0 * p.sigma0());
        assert!(g.x_max >= p.delta_x + 4.0 * p.sigma_trans());
        assert!(g.x_min < 0.0 && g.x_max > p.delta_x);

        let tight = build_grid(&p, 512, 0.0).unwrap();
        assert_relative_eq!(tight.x_min, -4.0 * p.sigma0(), epsilon = 1e-12);
        assert_relative_eq!(
            tight.x_max,
            p.delta_x + 4.0 * p.sigma_trans(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn coarse_grid_is_domain_too_small() {
        let p = calibrated();
        assert!(matches!(
            build_grid(&p, 128, default_padding(&p)),
            Err(Error::DomainTooSmall { .. })
        ));
        assert!(build_grid(&p, 256, default_padding(&p)).is_ok());
    }

    #[test]
    fn potential_minima() {
        let p = calibrated();
        let g = build_grid(&p, 512, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        // analytic minimum of v2, compared with the grid minimum which sits
        // within dx of Δx
        let min_v2 = h.v2.iter().cloned().fold(f64::INFINITY, f64::min);
        let slack = 0.5 * p.omega2 * p.omega2 * g.dx * g.dx;
        assert!(min_v2 >= p.delta_e && min_v2 <= p.delta_e + slack);
        assert_relative_eq!(p.v2(p.delta_x), 2.2604, epsilon = 1e-4);
        assert_eq!(p.v1(0.0), 0.0);
    }

    #[test]
    fn adiabatic_gap_at_crossing_is_twice_the_coupling() {
        let p = calibrated();
        let c = locate_crossing(&p).unwrap();
        let (a, d) = (p.v1(c.x_c), p.v2(c.x_c));
        let m = nalgebra::Matrix2::new(a, p.alpha, p.alpha, d);
        let eig = m.symmetric_eigenvalues();
        let gap = (eig[0] - eig[1]).abs();
        assert_relative_eq!(gap, 0.2, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_toy_crossing_is_midpoint() {
        let p = ModelParams {
            omega1: 0.02,
            omega2: 0.02,
            delta_e: 0.0,
            delta_x: 50.0,
            ..ModelParams::default()
        };
        let c = locate_crossing(&p).unwrap();
        assert_relative_eq!(c.x_c, 25.0, epsilon = 1e-12);
    }

    #[test]
    fn no_crossing_is_reported() {
        let p = ModelParams {
            delta_x: 50.0,
            ..ModelParams::default()
        };
        assert!(matches!(locate_crossing(&p), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn calibration_hits_target_and_arrival_window() {
        let p = calibrated();
        let c = locate_crossing(&p).unwrap();
        assert_relative_eq!(c.delta, 0.115, max_relative = 1e-6);
        assert!((c.arrival_time - 110.0).abs() <= 25.0, "{}", c.arrival_time);
        // crossing lies between the minima
        assert!(c.x_c > 0.0 && c.x_c < p.delta_x);
    }

    #[test]
    fn calibration_geometry_is_coupling_independent() {
        let p = calibrated();
        let doubled = ModelParams {
            alpha: 0.2,
            ..ModelParams::default()
        };
        let q = calibrate_offset(&doubled, 11.5 * 0.2 * 0.2).unwrap();
        assert_relative_eq!(p.delta_x, q.delta_x, max_relative = 1e-9);
        let (cp, cq) = (locate_crossing(&p).unwrap(), locate_crossing(&q).unwrap());
        assert_relative_eq!(cp.v_c * cp.slope_diff, 1.0 / 11.5, max_relative = 1e-6);
        assert_relative_eq!(cq.v_c * cq.slope_diff, 1.0 / 11.5, max_relative = 1e-6);
    }

    #[test]
    fn unreachable_target_fails() {
        let err = calibrate_offset(&ModelParams::default(), 1e9).unwrap_err();
        assert!(matches!(err, Error::CalibrationFailure { .. }), "{err}");
    }

    #[test]
    fn initial_packet_moments() {
        let p = calibrated();
        let g = build_grid(&p, 512, default_padding(&p)).unwrap();
        let psi = initial_state(&p, &g).unwrap();
        let (p1, p2) = psi.populations();
        assert_eq!(p1, 0.0);
        assert_relative_eq!(p2, 1.0, epsilon = 1e-10);
        let mean: f64 = psi
            .surface2
            .iter()
            .zip(&g.x)
            .map(|(c, x)| c.norm_sqr() * x)
            .sum();
        let second: f64 = psi
            .surface2
            .iter()
            .zip(&g.x)
            .map(|(c, x)| c.norm_sqr() * x * x)
            .sum();
        assert!(mean.abs() < 1e-6 * p.sigma0());
        assert_relative_eq!(second, 1.0 / (2.0 * p.omega1), max_relative = 1e-6);
    }

    #[test]
    fn clipped_packet_fails_normalization() {
        let p = calibrated();
        let g = build_grid(&p, 512, 0.0).unwrap();
        assert!(matches!(
            initial_state(&p, &g),
            Err(Error::NormalizationFailure { .. })
        ));
    }

    #[test]
    fn initial_energy_two_ways() {
        let p = calibrated();
        let g = build_grid(&p, 512, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let psi = initial_state(&p, &g).unwrap();

        // quadrature: potential in position space, kinetic in momentum space
        let potential: f64 = psi
            .surface2
            .iter()
            .zip(&h.v2)
            .map(|(c, v)| c.norm_sqr() * v)
            .sum();
        let mut phi = psi.surface2.clone();
        h.spectral().forward(&mut phi);
        let kinetic: f64 = phi
            .iter()
            .zip(&h.kinetic_spectrum)
            .map(|(c, t)| c.norm_sqr() * t)
            .sum::<f64>()
            / g.n_points as f64;
        let quadrature = potential + kinetic;
        let operator = h.expectation(&psi);
        assert_relative_eq!(quadrature, operator, max_relative = 1e-8);

        let analytic = p.delta_e
            + 0.5 * p.omega2 * p.omega2 * p.delta_x * p.delta_x
            + p.omega1 / 4.0 * (1.0 + (p.omega2 / p.omega1).powi(2));
        assert_relative_eq!(operator, analytic, max_relative = 1e-8);
    }

    #[test]
    fn decoupled_surfaces_do_not_mix() {
        let p = ModelParams {
            alpha: 0.0,
            ..calibrated()
        };
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let psi = initial_state(&p, &g).unwrap();
        let hpsi = h.apply(&psi);
        assert!(hpsi.surface1.iter().all(|c| c.norm() == 0.0));
    }
}
