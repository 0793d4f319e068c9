//! Strang split-operator stepping of a pure state under `H − iW`.
//!
//! One step is `L(dt/2) · K(dt) · L(dt/2)`: `K` is the free propagator,
//! exact in momentum space, and `L` the exact propagator of the 2×2
//! electronic matrix `V(x) − iW(x)` at each grid point.

use num_complex::Complex64;

use crate::lindblad::sink::{Sink, SinkMap};
use crate::model::{Hamiltonian, Wavefunction};
use crate::spectral::Spectral;

/// Row-major 2×2 complex matrix.
pub type Mat2 = [Complex64; 4];

/// `exp(−iτM)` for the complex symmetric `M = [[a, c], [c, b]]`.
///
/// Writing `M = m·1 + N` with `N² = s²·1` gives
/// `exp(−iτM) = e^{−iτm} (cos(τs)·1 − i sin(τs)/s · N)`.
pub fn exp_symmetric2(a: Complex64, b: Complex64, c: f64, tau: f64) -> Mat2 {
    let i = Complex64::i();
    let m = 0.5 * (a + b);
    let d = 0.5 * (a - b);
    let s = (d * d + c * c).sqrt();
    let ts = s * tau;
    let cos = ts.cos();
    let sinc = if ts.norm() < 1e-6 {
        tau * (1.0 - ts * ts / 6.0)
    } else {
        ts.sin() / s
    };
    let phase = (-i * tau * m).exp();
    let off = -i * sinc * c;
    [
        phase * (cos - i * sinc * d),
        phase * off,
        phase * off,
        phase * (cos + i * sinc * d),
    ]
}

/// Absorbed probability in one step, attributed to the cis and trans sinks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLoss {
    pub cis: f64,
    pub trans: f64,
}

impl StepLoss {
    pub fn total(&self) -> f64 {
        self.cis + self.trans
    }
}

impl std::ops::AddAssign for StepLoss {
    fn add_assign(&mut self, rhs: Self) {
        self.cis += rhs.cis;
        self.trans += rhs.trans;
    }
}

/// Precomputed factors for stepping a wavefunction with a fixed `dt`.
#[derive(Debug, Clone)]
pub struct PureSplit {
    dt: f64,
    local: Vec<Mat2>,
    kinetic: Vec<Complex64>,
    sinks: SinkMap,
    spectral: Spectral,
}

impl PureSplit {
    pub fn new(h: &Hamiltonian, sinks: &[Sink], dt: f64) -> Self {
        let map = SinkMap::new(h.n_points(), sinks);
        let local = (0..h.n_points())
            .map(|i| {
                let a = Complex64::new(h.v1[i], -map.w1[i]);
                let b = Complex64::new(h.v2[i], -map.w2[i]);
                exp_symmetric2(a, b, h.coupling, 0.5 * dt)
            })
            .collect();
        let kinetic = h
            .kinetic_spectrum
            .iter()
            .map(|t| Complex64::from_polar(1.0, -t * dt))
            .collect();
        Self {
            dt,
            local,
            kinetic,
            sinks: map,
            spectral: h.spectral().clone(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `psi` by `dt` and returns the norm absorbed on the way.
    pub fn step(&self, psi: &mut Wavefunction) -> StepLoss {
        let mut loss = self.apply_local(psi);
        self.spectral.apply_diagonal(&mut psi.surface1, &self.kinetic);
        self.spectral.apply_diagonal(&mut psi.surface2, &self.kinetic);
        loss += self.apply_local(psi);
        loss
    }

    fn apply_local(&self, psi: &mut Wavefunction) -> StepLoss {
        let mut loss = StepLoss::default();
        for (i, u) in self.local.iter().enumerate() {
            let (a, b) = (psi.surface1[i], psi.surface2[i]);
            let na = u[0] * a + u[1] * b;
            let nb = u[2] * a + u[3] * b;
            psi.surface1[i] = na;
            psi.surface2[i] = nb;
            if self.sinks.active[i] {
                let (p1, p2) = (a.norm_sqr(), b.norm_sqr());
                let drop = p1 + p2 - na.norm_sqr() - nb.norm_sqr();
                let (c, t) = self.sinks.split(i, p1, p2, drop);
                loss.cis += c;
                loss.trans += t;
            }
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix2;

    fn dense_exp(a: Complex64, b: Complex64, c: f64, tau: f64) -> Matrix2<Complex64> {
        let m = Matrix2::new(a, Complex64::from(c), Complex64::from(c), b);
        (m * Complex64::new(0.0, -tau)).exp()
    }

    #[test]
    fn closed_form_matches_series() {
        let cases = [
            (Complex64::new(1.3, 0.0), Complex64::new(-0.4, 0.0), 0.7, 0.3),
            (Complex64::new(2.0, -0.5), Complex64::new(1.0, -0.1), 0.1, 0.2),
            (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0), 0.0, 1.0),
            (Complex64::new(0.5, -1e-9), Complex64::new(0.5, 0.0), 1e-8, 0.4),
        ];
        for (a, b, c, tau) in cases {
            let u = exp_symmetric2(a, b, c, tau);
            let r = dense_exp(a, b, c, tau);
            for (k, v) in u.iter().enumerate() {
                assert_relative_eq!(v.re, r[(k / 2, k % 2)].re, epsilon = 1e-12);
                assert_relative_eq!(v.im, r[(k / 2, k % 2)].im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_case_is_unitary() {
        let u = exp_symmetric2(Complex64::new(3.0, 0.0), Complex64::new(1.0, 0.0), 0.4, 0.7);
        let m = Matrix2::new(u[0], u[1], u[2], u[3]);
        let id = m.adjoint() * m;
        assert!((id - Matrix2::identity()).norm() < 1e-13);
    }
}
