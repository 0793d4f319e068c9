//! Dense propagation of ρ under
//! `dρ/dt = −i(H_eff ρ − ρ H_eff†) + γ(t)(Σ Mᵢ ρ Mᵢ − ρ)`, `H_eff = H − iW`.
//!
//! Each step is the Strang product `L(dt/2) · K(dt) · L(dt/2)`.
//! `K` is the free propagator `ρ ↦ e^{−iTdt} ρ e^{iTdt}`, exact in momentum
//! space. `L` collects everything that is local in position: for a grid pair
//! `(i, j)` the four numbers `ρ_ab(x_i, x_j)` evolve under a closed 4×4
//! linear system (potentials, coupling, absorption, dephasing), which is
//! integrated exactly with a matrix exponential. Dephasing therefore never
//! limits the step, however large γ is.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::density::DensityState;
use crate::lindblad::schedule::PulseSchedule;
use crate::lindblad::sink::{Sink, SinkLedger, SinkMap};
use crate::model::Hamiltonian;
use crate::spectral::transpose_in_place;
use crate::wavepacket::{exp_symmetric2, Mat2, StepLoss};

const TRACE_GROWTH_LIMIT: f64 = 1e-6;
const NEGATIVITY_LIMIT: f64 = -1e-5;
const FACTOR_CACHE_SIZE: usize = 6;

/// 4×4 propagator acting on `(ρ₁₁, ρ₁₂, ρ₂₁, ρ₂₂)` at one grid pair.
type PairFactor = [Complex64; 16];

/// Position-local propagator for every grid pair.
enum LocalFactor {
    /// Without dephasing the pair map is `ρ ↦ U_i ρ U_j†`.
    Product { u: Vec<Mat2>, u_adj: Vec<Mat2> },
    /// Full 4×4 maps for pairs `i ≤ j`, row-major over the upper triangle.
    Pairs(Vec<PairFactor>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSettings {
    /// Time step, fs. The run uses the largest step `≤ dt` that divides the
    /// span evenly.
    pub dt: f64,
    pub t_final: f64,
    /// Spacing of recorded observables, fs; 0 records only the endpoints.
    pub record_interval: f64,
    /// Number of evenly spaced full eigenvalue checks of ρ.
    pub positivity_checkpoints: usize,
    /// Include `tr(Hρ)` in the records.
    pub track_energy: bool,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        Self {
            dt: 0.2,
            t_final: 1100.0,
            record_interval: 0.0,
            positivity_checkpoints: 0,
            track_energy: false,
        }
    }
}

/// Observables at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub time: f64,
    pub gamma: f64,
    pub pop1: f64,
    pub pop2: f64,
    pub absorbed_cis: f64,
    pub absorbed_trans: f64,
    pub purity: f64,
    pub energy: Option<f64>,
}

impl Record {
    pub fn trace(&self) -> f64 {
        self.pop1 + self.pop2
    }

    /// `tr ρ + absorbed − 1`.
    pub fn ledger_defect(&self) -> f64 {
        self.trace() + self.absorbed_cis + self.absorbed_trans - 1.0
    }
}

/// Hook called at every recorded time.
pub trait Observer {
    fn observe(&mut self, state: &DensityState, ledger: &SinkLedger);
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: DensityState,
    pub ledger: SinkLedger,
    pub records: Vec<Record>,
    /// `(time, smallest eigenvalue)` at each positivity checkpoint.
    pub positivity: Vec<(f64, f64)>,
    pub steps: usize,
    pub dt: f64,
}

/// Reusable propagation machinery for one Hamiltonian, sink set and step.
pub struct DensePropagator<'a> {
    h: &'a Hamiltonian,
    sinks: SinkMap,
    dt: f64,
    /// `e^{−iT_k dt} e^{iT_l dt} / n²`, indexed `[l·n + k]`.
    kinetic: Vec<Complex64>,
    row_offset: Vec<usize>,
    cache: HashMap<(u64, bool), Arc<LocalFactor>>,
    cache_order: VecDeque<(u64, bool)>,
}

impl<'a> DensePropagator<'a> {
    pub fn new(h: &'a Hamiltonian, sinks: &[Sink], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
        }
        let n = h.n_points();
        let norm = 1.0 / (n as f64 * n as f64);
        let phase: Vec<Complex64> = h
            .kinetic_spectrum
            .iter()
            .map(|t| Complex64::from_polar(1.0, -t * dt))
            .collect();
        let mut kinetic = vec![Complex64::default(); n * n];
        for l in 0..n {
            for k in 0..n {
                kinetic[l * n + k] = phase[k] * phase[l].conj() * norm;
            }
        }
        let mut row_offset = Vec::with_capacity(n);
        let mut acc = 0;
        for i in 0..n {
            row_offset.push(acc);
            acc += n - i;
        }
        Ok(Self {
            h,
            sinks: SinkMap::new(n, sinks),
            dt,
            kinetic,
            row_offset,
            cache: HashMap::new(),
            cache_order: VecDeque::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Local factor over `dt/2` (or `dt` when `full`) at rate `gamma`,
    /// cached by value.
    fn factors(&mut self, gamma: f64, full: bool) -> Arc<LocalFactor> {
        let key = (gamma.to_bits(), full);
        if let Some(f) = self.cache.get(&key) {
            return Arc::clone(f);
        }
        let tau = if full { self.dt } else { 0.5 * self.dt };
        let f = Arc::new(self.build_factors(gamma, tau));
        if self.cache_order.len() == FACTOR_CACHE_SIZE {
            if let Some(old) = self.cache_order.pop_front() {
                self.cache.remove(&old);
            }
        }
        self.cache_order.push_back(key);
        self.cache.insert(key, Arc::clone(&f));
        f
    }

    fn build_factors(&self, gamma: f64, tau: f64) -> LocalFactor {
        let n = self.h.n_points();
        let heff: Vec<[Complex64; 2]> = (0..n)
            .map(|i| {
                [
                    Complex64::new(self.h.v1[i], -self.sinks.w1[i]),
                    Complex64::new(self.h.v2[i], -self.sinks.w2[i]),
                ]
            })
            .collect();
        let alpha = self.h.coupling;
        if gamma == 0.0 {
            let u: Vec<Mat2> = heff
                .iter()
                .map(|d| exp_symmetric2(d[0], d[1], alpha, tau))
                .collect();
            let u_adj = u
                .iter()
                .map(|m| [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()])
                .collect();
            return LocalFactor::Product { u, u_adj };
        }
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(pair_exponential(&heff[i], &heff[j], alpha, gamma, tau));
            }
        }
        LocalFactor::Pairs(out)
    }

    fn apply_local(&self, rho: &mut DensityState, factor: &LocalFactor) -> StepLoss {
        match factor {
            LocalFactor::Product { u, u_adj } => self.apply_pairwise(rho, |i, j, v| {
                let (a, b) = (&u[i], &u_adj[j]);
                let t = [
                    a[0] * v[0] + a[1] * v[2],
                    a[0] * v[1] + a[1] * v[3],
                    a[2] * v[0] + a[3] * v[2],
                    a[2] * v[1] + a[3] * v[3],
                ];
                [
                    t[0] * b[0] + t[1] * b[2],
                    t[0] * b[1] + t[1] * b[3],
                    t[2] * b[0] + t[3] * b[2],
                    t[2] * b[1] + t[3] * b[3],
                ]
            }),
            LocalFactor::Pairs(pairs) => self.apply_pairwise(rho, |i, j, v| {
                let f = &pairs[self.row_offset[i] + j - i];
                let mut w = [Complex64::default(); 4];
                for (r, out) in w.iter_mut().enumerate() {
                    *out = f[4 * r] * v[0]
                        + f[4 * r + 1] * v[1]
                        + f[4 * r + 2] * v[2]
                        + f[4 * r + 3] * v[3];
                }
                w
            }),
        }
    }

    /// Maps every grid pair through `map` and returns the absorbed
    /// probability, read off the drop of the diagonal.
    ///
    /// Only pairs `i ≤ j` are propagated; `(j, i)` is written as the adjoint
    /// image, so ρ leaves this call exactly Hermitian. The coherence `ρ₂₁` is
    /// read from `ρ₁₂†`, which lets the kinetic step skip that block.
    #[inline(always)]
    fn apply_pairwise<F>(&self, rho: &mut DensityState, map: F) -> StepLoss
    where
        F: Fn(usize, usize, [Complex64; 4]) -> [Complex64; 4],
    {
        const TILE: usize = 16;
        let n = rho.n;
        let mut loss = StepLoss::default();
        for bi in (0..n).step_by(TILE) {
            for bj in (bi..n).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    for j in i.max(bj)..(bj + TILE).min(n) {
                        let (ij, ji) = (i * n + j, j * n + i);
                        let v = [rho.rho11[ij], rho.rho12[ij], rho.rho12[ji].conj(), rho.rho22[ij]];
                        let w = map(i, j, v);
                        if i == j {
                            let coherence = 0.5 * (w[1] + w[2].conj());
                            rho.rho11[ij] = Complex64::new(w[0].re, 0.0);
                            rho.rho12[ij] = coherence;
                            rho.rho21[ij] = coherence.conj();
                            rho.rho22[ij] = Complex64::new(w[3].re, 0.0);
                            if self.sinks.active[i] {
                                let drop = v[0].re + v[3].re - w[0].re - w[3].re;
                                let (c, t) = self.sinks.split(i, v[0].re, v[3].re, drop);
                                loss.cis += c;
                                loss.trans += t;
                            }
                        } else {
                            rho.rho11[ij] = w[0];
                            rho.rho12[ij] = w[1];
                            rho.rho21[ij] = w[2];
                            rho.rho22[ij] = w[3];
                            rho.rho11[ji] = w[0].conj();
                            rho.rho12[ji] = w[2].conj();
                            rho.rho21[ji] = w[1].conj();
                            rho.rho22[ji] = w[3].conj();
                        }
                    }
                }
            }
        }
        loss
    }

    /// `B ← e^{−iTdt} B e^{iTdt}` via a 2-D transform.
    fn apply_kinetic(&self, block: &mut [Complex64]) {
        let n = self.h.n_points();
        let spectral = self.h.spectral();
        spectral.inverse(block);
        transpose_in_place(block, n);
        spectral.forward(block);
        for (b, k) in block.iter_mut().zip(&self.kinetic) {
            *b *= k;
        }
        spectral.inverse(block);
        transpose_in_place(block, n);
        spectral.forward(block);
    }

    /// Local factor over half a step.
    pub fn half_local(&mut self, rho: &mut DensityState, gamma: f64) -> StepLoss {
        let f = self.factors(gamma, false);
        self.apply_local(rho, &f)
    }

    /// Two consecutive half-step local factors at the same rate, fused.
    pub fn full_local(&mut self, rho: &mut DensityState, gamma: f64) -> StepLoss {
        let f = self.factors(gamma, true);
        self.apply_local(rho, &f)
    }

    /// Free propagation over a full step. Leaves `ρ₂₁` stale until the next
    /// local factor.
    pub fn kinetic(&self, rho: &mut DensityState) {
        self.apply_kinetic(&mut rho.rho11);
        self.apply_kinetic(&mut rho.rho12);
        self.apply_kinetic(&mut rho.rho22);
    }

    /// One full step with the given rates for the two local half steps.
    pub fn step(&mut self, rho: &mut DensityState, gamma_first: f64, gamma_second: f64) -> StepLoss {
        let mut loss = self.half_local(rho, gamma_first);
        self.kinetic(rho);
        loss += self.half_local(rho, gamma_second);
        rho.time += self.dt;
        loss
    }
}

/// `exp(τG)` for the pair generator
/// `G ρ = −i(A ρ − ρ B†) − γ (off-diagonal part of ρ)`, with
/// `A = H_eff(x_i)`, `B = H_eff(x_j)`.
///
/// The dephasing term is the two-projector dissipator
/// `γ Σ_k (P_k ρ P_k − ½{P_k, ρ})` with `P₁ + P₂ = 1`: the anticommutators sum
/// to `−γρ` and `Σ P_k ρ P_k` keeps only the diagonal blocks, leaving `−γ` on
/// the coherences and nothing on the populations.
fn pair_exponential(
    a_diag: &[Complex64; 2],
    b_diag: &[Complex64; 2],
    alpha: f64,
    gamma: f64,
    tau: f64,
) -> PairFactor {
    let i = Complex64::i();
    let c = Complex64::from(alpha);
    let a = [[a_diag[0], c], [c, a_diag[1]]];
    let b = [[b_diag[0], c], [c, b_diag[1]]];
    let mut g = Matrix4::<Complex64>::zeros();
    for r in 0..2 {
        for s in 0..2 {
            let row = 2 * r + s;
            for k in 0..2 {
                g[(row, 2 * k + s)] += -i * a[r][k];
                g[(row, 2 * r + k)] += i * b[s][k].conj();
            }
        }
    }
    g[(1, 1)] -= gamma;
    g[(2, 2)] -= gamma;
    let e = (g * Complex64::from(tau)).exp();
    let mut f = [Complex64::default(); 16];
    for r in 0..4 {
        for s in 0..4 {
            f[4 * r + s] = e[(r, s)];
        }
    }
    f
}

/// Rate used for a half step: the schedule at its midpoint.
fn half_step_rates(schedule: &PulseSchedule, t: f64, dt: f64) -> (f64, f64) {
    (
        schedule.gamma_at(t + 0.25 * dt),
        schedule.gamma_at(t + 0.75 * dt),
    )
}

/// Propagates `state` to `settings.t_final`.
///
/// Aborts with [`Error::StepInstability`] when the trace plus absorbed
/// probability grows beyond 1 + 10⁻⁶, a diagonal entry drops below −10⁻⁵, or
/// a value turns non-finite.
pub fn evolve(
    state: DensityState,
    h: &Hamiltonian,
    sinks: &[Sink],
    schedule: &PulseSchedule,
    settings: &EvolveSettings,
    observers: &mut [&mut dyn Observer],
) -> Result<Evolution> {
    if state.n != h.n_points() {
        return Err(Error::InvalidParams(format!(
            "state has {} points, Hamiltonian {}",
            state.n,
            h.n_points()
        )));
    }
    let span = settings.t_final - state.time;
    if !(span > 0.0) {
        return Err(Error::InvalidParams(format!(
            "t_final {} must exceed the state time {}",
            settings.t_final, state.time
        )));
    }
    if !(settings.dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {}", settings.dt)));
    }
    schedule.check_horizon(settings.t_final)?;
    let steps = (span / settings.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let stride = if settings.record_interval > 0.0 {
        ((settings.record_interval / dt).round() as usize).max(1)
    } else {
        steps
    };
    let checkpoints: Vec<usize> = (1..=settings.positivity_checkpoints)
        .map(|k| (k * steps) / settings.positivity_checkpoints)
        .collect();

    let mut prop = DensePropagator::new(h, sinks, dt)?;
    let mut rho = state;
    let mut ledger = SinkLedger::default();
    let mut records = Vec::new();
    let mut positivity = Vec::new();
    let t0 = rho.time;
    let initial_total = rho.trace();

    let mut record = |rho: &DensityState, ledger: &mut SinkLedger, observers: &mut [&mut dyn Observer]| {
        let (pop1, pop2) = rho.populations();
        ledger.snapshot(rho.time);
        records.push(Record {
            time: rho.time,
            gamma: schedule.gamma_at(rho.time),
            pop1,
            pop2,
            absorbed_cis: ledger.absorbed_cis,
            absorbed_trans: ledger.absorbed_trans,
            purity: rho.purity(),
            energy: settings.track_energy.then(|| rho.energy(h)),
        });
        for o in observers.iter_mut() {
            o.observe(rho, ledger);
        }
    };
    record(&rho, &mut ledger, observers);

    // Consecutive half-step local factors at equal rates are fused unless
    // the state is needed at the step boundary in between.
    let mut opened = false;
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * dt;
        let (g1, g2) = half_step_rates(schedule, t, dt);
        let mut loss = StepLoss::default();
        if !opened {
            loss += prop.half_local(&mut rho, g1);
        }
        prop.kinetic(&mut rho);
        let boundary = k == steps || k % stride == 0 || checkpoints.contains(&k);
        let next_first = schedule.gamma_at(t + 1.25 * dt);
        if !boundary && next_first.to_bits() == g2.to_bits() {
            loss += prop.full_local(&mut rho, g2);
            opened = true;
        } else {
            loss += prop.half_local(&mut rho, g2);
            opened = false;
        }
        rho.time = t0 + k as f64 * dt;
        ledger.book(loss.cis, loss.trans);

        let trace = rho.trace();
        if !trace.is_finite() {
            return Err(Error::StepInstability {
                time: rho.time,
                reason: "non-finite density".into(),
            });
        }
        let growth = trace + ledger.total() - initial_total;
        if growth > TRACE_GROWTH_LIMIT {
            return Err(Error::StepInstability {
                time: rho.time,
                reason: format!("trace plus absorbed grew by {growth:.3e}"),
            });
        }
        let min_diag = rho.min_diagonal();
        if min_diag < NEGATIVITY_LIMIT {
            return Err(Error::StepInstability {
                time: rho.time,
                reason: format!("negative population {min_diag:.3e}"),
            });
        }
        if checkpoints.contains(&k) {
            positivity.push((rho.time, rho.min_eigenvalue()));
        }
        if k % stride == 0 || k == steps {
            record(&rho, &mut ledger, observers);
        }
    }

    Ok(Evolution {
        state: rho,
        ledger,
        records,
        positivity,
        steps,
        dt,
    })
}
