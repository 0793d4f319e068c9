//! Block-structured density operator over grid ⊗ {|1⟩, |2⟩}.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::model::{Grid, Hamiltonian, Wavefunction};
use crate::spectral::transpose_in_place;

/// ρ split into its four electronic blocks, each `n × n` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub n: usize,
    pub rho11: Vec<Complex64>,
    pub rho12: Vec<Complex64>,
    pub rho21: Vec<Complex64>,
    pub rho22: Vec<Complex64>,
    /// fs
    pub time: f64,
}

impl DensityState {
    pub fn zeros(n: usize) -> Self {
        let z = vec![Complex64::default(); n * n];
        Self {
            n,
            rho11: z.clone(),
            rho12: z.clone(),
            rho21: z.clone(),
            rho22: z,
            time: 0.0,
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &Wavefunction) -> Self {
        let n = psi.len();
        let mut s = Self::zeros(n);
        let outer = |a: &[Complex64], b: &[Complex64], out: &mut [Complex64]| {
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = a[i] * b[j].conj();
                }
            }
        };
        outer(&psi.surface1, &psi.surface1, &mut s.rho11);
        outer(&psi.surface1, &psi.surface2, &mut s.rho12);
        outer(&psi.surface2, &psi.surface1, &mut s.rho21);
        outer(&psi.surface2, &psi.surface2, &mut s.rho22);
        s
    }

    pub fn blocks(&self) -> [&[Complex64]; 4] {
        [&self.rho11, &self.rho12, &self.rho21, &self.rho22]
    }

    fn diag_sum(block: &[Complex64], n: usize) -> f64 {
        (0..n).map(|i| block[i * n + i].re).sum()
    }

    /// `(tr ρ₁₁, tr ρ₂₂)`.
    pub fn populations(&self) -> (f64, f64) {
        (
            Self::diag_sum(&self.rho11, self.n),
            Self::diag_sum(&self.rho22, self.n),
        )
    }

    pub fn trace(&self) -> f64 {
        let (a, b) = self.populations();
        a + b
    }

    /// `tr ρ²`, using Hermiticity: the sum of squared moduli of all entries.
    pub fn purity(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Largest entry of `ρ − ρ†`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (ij, ji) = (i * n + j, j * n + i);
                worst = worst
                    .max((self.rho11[ij] - self.rho11[ji].conj()).norm())
                    .max((self.rho22[ij] - self.rho22[ji].conj()).norm())
                    .max((self.rho12[ij] - self.rho21[ji].conj()).norm());
            }
        }
        worst
    }

    /// `ρ ← (ρ + ρ†)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for block in [&mut self.rho11, &mut self.rho22] {
            for i in 0..n {
                block[i * n + i].im = 0.0;
                for j in i + 1..n {
                    let m = 0.5 * (block[i * n + j] + block[j * n + i].conj());
                    block[i * n + j] = m;
                    block[j * n + i] = m.conj();
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let m = 0.5 * (self.rho12[i * n + j] + self.rho21[j * n + i].conj());
                self.rho12[i * n + j] = m;
                self.rho21[j * n + i] = m.conj();
            }
        }
    }

    /// Full `2n × 2n` matrix with surface 1 in the upper-left block.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let n = self.n;
        DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (bi, i) = (r / n, r % n);
            let (bj, j) = (c / n, c % n);
            let block = match (bi, bj) {
                (0, 0) => &self.rho11,
                (0, _) => &self.rho12,
                (_, 0) => &self.rho21,
                _ => &self.rho22,
            };
            block[i * n + j]
        })
    }

    /// Smallest eigenvalue of ρ.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        m.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest diagonal entry over both surfaces.
    pub fn min_diagonal(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| self.rho11[i * n + i].re.min(self.rho22[i * n + i].re))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn has_non_finite(&self) -> bool {
        self.blocks()
            .iter()
            .any(|b| b.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())))
    }

    /// Surface-2 population at grid points beyond `x_c`.
    pub fn excited_population_beyond(&self, grid: &Grid, x_c: f64) -> f64 {
        let n = self.n;
        (0..n)
            .filter(|&i| grid.x[i] > x_c)
            .map(|i| self.rho22[i * n + i].re)
            .sum()
    }

    /// `tr(Hρ)`.
    pub fn energy(&self, h: &Hamiltonian) -> f64 {
        let n = self.n;
        let kinetic = kinetic_trace(&self.rho11, h) + kinetic_trace(&self.rho22, h);
        let mut potential = 0.0;
        let mut coupling = Complex64::default();
        for i in 0..n {
            potential += h.v1[i] * self.rho11[i * n + i].re + h.v2[i] * self.rho22[i * n + i].re;
            coupling += self.rho12[i * n + i] + self.rho21[i * n + i];
        }
        kinetic + potential + h.coupling * coupling.re
    }
}

/// `tr(T B)` for a Hermitian block: `Σ_k T_k (F B F†)_kk / n`.
fn kinetic_trace(block: &[Complex64], h: &Hamiltonian) -> f64 {
    let n = h.n_points();
    let spectral = h.spectral();
    let mut work = block.to_vec();
    // columns → rows, forward transform each: gives (F B)ᵀ
    transpose_in_place(&mut work, n);
    spectral.forward(&mut work);
    transpose_in_place(&mut work, n);
    // rows of F B, conjugated transform gives (F B F†)
    for row in work.chunks_mut(n) {
        for c in row.iter_mut() {
            *c = c.conj();
        }
    }
    spectral.forward(&mut work);
    let mut sum = 0.0;
    for k in 0..n {
        sum += h.kinetic_spectrum[k] * work[k * n + k].conj().re;
    }
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, build_hamiltonian, default_padding, initial_state, ModelParams};

    #[test]
    fn pure_initial_state_observables() {
        let p = ModelParams::calibrated().unwrap();
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let psi = initial_state(&p, &g).unwrap();
        let rho = DensityState::from_pure(&psi);
        let (p1, p2) = rho.populations();
        assert_eq!(p1, 0.0);
        assert!((p2 - 1.0).abs() < 1e-10);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        assert_eq!(rho.hermiticity_error(), 0.0);
        let e_pure = h.expectation(&psi);
        assert!((rho.energy(&h) - e_pure).abs() < 1e-9 * e_pure.abs());
    }

    #[test]
    fn mixed_electronic_state_is_half_half() {
        let p = ModelParams::calibrated().unwrap();
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let psi = initial_state(&p, &g).unwrap();
        let n = g.n_points;
        let pure = DensityState::from_pure(&psi);
        let mut rho = DensityState::zeros(n);
        for k in 0..n * n {
            rho.rho11[k] = 0.5 * pure.rho22[k];
            rho.rho22[k] = 0.5 * pure.rho22[k];
        }
        let (p1, p2) = rho.populations();
        assert!((p1 - 0.5).abs() < 1e-10 && (p2 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn symmetrize_projects_onto_hermitian() {
        let n = 8;
        let mut rho = DensityState::zeros(n);
        for (k, c) in rho.rho12.iter_mut().enumerate() {
            *c = Complex64::new(k as f64, 1.0);
        }
        for (k, c) in rho.rho11.iter_mut().enumerate() {
            *c = Complex64::new((k % 5) as f64, (k % 3) as f64);
        }
        rho.symmetrize();
        assert!(rho.hermiticity_error() < 1e-15);
        let m = rho.to_matrix();
        assert!((m.adjoint() - &m).norm() < 1e-12);
    }
}
