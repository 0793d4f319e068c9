//! Quantum-jump unraveling of the master equation.
//!
//! A trajectory is a normalized wavefunction stepped under `H − iW`. The norm
//! lost to the sinks in a step is the probability that the trajectory ends in
//! that step, in which case it is booked to the cis or trans outcome in
//! proportion to the two sinks' shares. Survivors are renormalized and then
//! measured: with probability `1 − e^{−γ dt}` one electronic projector is
//! applied, chosen by its Born weight.
//!
//! The dephasing part of `H_eff`, `−iγ/2 · 1`, is a uniform norm decay
//! exactly compensated by the jump probability, so it is folded into the
//! Bernoulli draw instead of the propagator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::{PulseSchedule, Sink};
use crate::model::{Hamiltonian, Wavefunction};
use crate::wavepacket::PureSplit;

/// Largest admissible per-step measurement probability.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Cis,
    Trans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub psi: Wavefunction,
    pub time: f64,
    /// Index of the random substream driving this trajectory.
    pub stream: u64,
    pub alive: bool,
    pub outcome: Option<Outcome>,
    pub absorbed_cis: f64,
    pub absorbed_trans: f64,
}

impl TrajectoryState {
    pub fn new(psi: Wavefunction, stream: u64) -> Self {
        Self {
            psi,
            time: 0.0,
            stream,
            alive: true,
            outcome: None,
            absorbed_cis: 0.0,
            absorbed_trans: 0.0,
        }
    }

    pub fn booked(&self) -> f64 {
        self.absorbed_cis + self.absorbed_trans
    }

    fn terminate(&mut self, outcome: Outcome) {
        self.alive = false;
        self.outcome = Some(outcome);
        match outcome {
            Outcome::Cis => self.absorbed_cis = 1.0,
            Outcome::Trans => self.absorbed_trans = 1.0,
        }
        for c in self.psi.surface1.iter_mut().chain(self.psi.surface2.iter_mut()) {
            *c = Default::default();
        }
    }
}

/// Deterministic generator for trajectory `stream` of an ensemble seeded by `seed`.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Advances one trajectory by `stepper.dt()` at measurement rate `gamma`.
pub fn jump_step<R: Rng>(
    state: &mut TrajectoryState,
    stepper: &PureSplit,
    gamma: f64,
    rng: &mut R,
) -> Result<()> {
    let dt = stepper.dt();
    let p_jump = 1.0 - (-gamma * dt).exp();
    if p_jump >= MAX_JUMP_PROBABILITY {
        return Err(Error::StepTooLarge {
            probability: p_jump,
        });
    }
    if !state.alive {
        state.time += dt;
        return Ok(());
    }
    let before = state.psi.norm_sqr();
    let loss = stepper.step(&mut state.psi);
    let after = state.psi.norm_sqr();
    let p_end = ((before - after) / before).max(0.0);
    if p_end > 0.0 {
        let r: f64 = rng.gen();
        if r < p_end {
            let cis_share = if loss.total() > 0.0 {
                loss.cis / loss.total()
            } else {
                0.0
            };
            let outcome = if r < p_end * cis_share {
                Outcome::Cis
            } else {
                Outcome::Trans
            };
            state.terminate(outcome);
            state.time += dt;
            return Ok(());
        }
    }
    state.psi.scale(1.0 / after.sqrt());

    if gamma > 0.0 && rng.gen::<f64>() < p_jump {
        let (p1, _) = state.psi.populations();
        let total = state.psi.norm_sqr();
        if rng.gen::<f64>() * total < p1 {
            state.psi.surface2.iter_mut().for_each(|c| *c = Default::default());
        } else {
            state.psi.surface1.iter_mut().for_each(|c| *c = Default::default());
        }
        let kept = state.psi.norm_sqr();
        state.psi.scale(1.0 / kept.sqrt());
    }
    state.time += dt;
    Ok(())
}

/// Everything an ensemble needs besides the schedule and the seed.
#[derive(Debug, Clone)]
pub struct EnsembleSetup<'a> {
    pub hamiltonian: &'a Hamiltonian,
    pub sinks: &'a [Sink],
    pub initial: &'a Wavefunction,
    /// Base step, fs. Inside measurement windows it is halved until the jump
    /// probability per step is below [`MAX_JUMP_PROBABILITY`].
    pub dt: f64,
    pub t_final: f64,
    /// Times at which ensemble averages are collected (rounded to base steps).
    pub checkpoints: Vec<f64>,
    /// When set, also estimate the trans population at `t_final`: the trans
    /// outcome plus, for surviving trajectories, the surface-2 weight beyond
    /// this position.
    pub transit_threshold: Option<f64>,
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}

/// Ensemble averages at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointEstimate {
    pub time: f64,
    pub pop1: Estimate,
    pub pop2: Estimate,
    pub absorbed_cis: Estimate,
    pub absorbed_trans: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub n_trajectories: usize,
    /// Fraction of trajectories ending in the trans sink by `t_final`.
    pub yield_mean: f64,
    pub yield_stderr: f64,
    pub cis: usize,
    pub trans: usize,
    pub unresolved: usize,
    pub checkpoints: Vec<CheckpointEstimate>,
    pub transit: Option<Estimate>,
}

struct TrajectoryOutput {
    outcome: Option<Outcome>,
    samples: Vec<[f64; 4]>,
    transit: f64,
}

/// Runs `n_trajectories` independent trajectories on the current rayon pool.
///
/// Trajectory `k` draws from substream `k` of a generator seeded by `seed`, so
/// results do not depend on scheduling or worker count.
pub fn run_ensemble(
    setup: &EnsembleSetup<'_>,
    schedule: &PulseSchedule,
    n_trajectories: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if n_trajectories == 0 {
        return Err(Error::InvalidParams("need at least one trajectory".into()));
    }
    if !(setup.dt > 0.0 && setup.t_final > 0.0) {
        return Err(Error::InvalidParams("dt and t_final must be positive".into()));
    }
    schedule.check_horizon(setup.t_final)?;
    let steps = (setup.t_final / setup.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = setup.t_final / steps as f64;

    // substep level per base step, and one stepper per level in use
    let levels: Vec<u32> = (0..steps)
        .map(|k| {
            let t = k as f64 * dt;
            let g = schedule.max_gamma_between(t, t + dt);
            let mut level = 0;
            while 1.0 - (-g * dt / f64::from(1u32 << level)).exp() >= MAX_JUMP_PROBABILITY {
                level += 1;
            }
            level
        })
        .collect();
    let max_level = levels.iter().copied().max().unwrap_or(0);
    let steppers: Vec<PureSplit> = (0..=max_level)
        .map(|l| PureSplit::new(setup.hamiltonian, setup.sinks, dt / f64::from(1u32 << l)))
        .collect();
    let checkpoint_steps: Vec<usize> = setup
        .checkpoints
        .iter()
        .map(|t| ((t / dt).round() as usize).min(steps))
        .collect();

    let run_one = |k: usize| -> Result<TrajectoryOutput> {
        let mut rng = trajectory_rng(seed, k as u64);
        let mut state = TrajectoryState::new(setup.initial.clone(), k as u64);
        let mut samples = vec![[0.0; 4]; checkpoint_steps.len()];
        let sample = |state: &TrajectoryState| {
            let (p1, p2) = state.psi.populations();
            [p1, p2, state.absorbed_cis, state.absorbed_trans]
        };
        for (slot, &c) in samples.iter_mut().zip(&checkpoint_steps) {
            if c == 0 {
                *slot = sample(&state);
            }
        }
        for (step, &level) in levels.iter().enumerate() {
            if !state.alive {
                break;
            }
            let stepper = &steppers[level as usize];
            let sub = 1usize << level;
            let t0 = step as f64 * dt;
            for s in 0..sub {
                let mid = t0 + (s as f64 + 0.5) * stepper.dt();
                jump_step(&mut state, stepper, schedule.gamma_at(mid), &mut rng)?;
            }
            state.time = (step + 1) as f64 * dt;
            for (slot, &c) in samples.iter_mut().zip(&checkpoint_steps) {
                if c == step + 1 {
                    *slot = sample(&state);
                }
            }
        }
        if !state.alive {
            // terminated trajectories keep their final values at later checkpoints
            let last = sample(&state);
            let done_at = (state.time / dt).round() as usize;
            for (slot, &c) in samples.iter_mut().zip(&checkpoint_steps) {
                if c >= done_at {
                    *slot = last;
                }
            }
        }
        let transit = match setup.transit_threshold {
            Some(x_c) => {
                let grid = &setup.hamiltonian.grid;
                let beyond: f64 = if state.alive {
                    (0..grid.n_points)
                        .filter(|&i| grid.x[i] > x_c)
                        .map(|i| state.psi.surface2[i].norm_sqr())
                        .sum()
                } else {
                    0.0
                };
                f64::from(u8::from(state.outcome == Some(Outcome::Trans))) + beyond
            }
            None => 0.0,
        };
        Ok(TrajectoryOutput {
            outcome: state.outcome,
            samples,
            transit,
        })
    };

    let outputs: Vec<TrajectoryOutput> = (0..n_trajectories)
        .into_par_iter()
        .map(run_one)
        .collect::<Result<_>>()?;

    let count = |o: Option<Outcome>| outputs.iter().filter(|r| r.outcome == o).count();
    let (cis, trans, unresolved) = (
        count(Some(Outcome::Cis)),
        count(Some(Outcome::Trans)),
        count(None),
    );
    let yields: Vec<f64> = outputs
        .iter()
        .map(|r| f64::from(u8::from(r.outcome == Some(Outcome::Trans))))
        .collect();
    let y = Estimate::from_samples(&yields);
    let checkpoints = checkpoint_steps
        .iter()
        .enumerate()
        .map(|(c, &step)| {
            let column = |q: usize| {
                let v: Vec<f64> = outputs.iter().map(|r| r.samples[c][q]).collect();
                Estimate::from_samples(&v)
            };
            CheckpointEstimate {
                time: step as f64 * dt,
                pop1: column(0),
                pop2: column(1),
                absorbed_cis: column(2),
                absorbed_trans: column(3),
            }
        })
        .collect();
    Ok(EnsembleResult {
        n_trajectories,
        yield_mean: y.mean,
        yield_stderr: y.stderr,
        cis,
        trans,
        unresolved,
        checkpoints,
        transit: setup.transit_threshold.map(|_| {
            let v: Vec<f64> = outputs.iter().map(|r| r.transit).collect();
            Estimate::from_samples(&v)
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::default_sinks;
    use crate::model::{build_grid, build_hamiltonian, default_padding, initial_state, ModelParams};

    #[test]
    fn estimate_uses_sample_deviation() {
        let e = Estimate::from_samples(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(e.mean, 0.5);
        let sd = (1.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(Estimate::from_samples(&[0.3]).stderr, 0.0);
    }

    #[test]
    fn closed_step_conserves_norm() {
        let p = ModelParams::calibrated().unwrap();
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let stepper = PureSplit::new(&h, &[], 0.2);
        let mut state = TrajectoryState::new(initial_state(&p, &g).unwrap(), 0);
        let mut rng = trajectory_rng(1, 0);
        for _ in 0..500 {
            jump_step(&mut state, &stepper, 0.0, &mut rng).unwrap();
        }
        assert!(state.alive);
        assert!((state.psi.norm_sqr() - 1.0).abs() < 1e-8);
        assert!((state.time - 100.0).abs() < 1e-9);
    }

    #[test]
    fn jump_on_single_surface_keeps_state() {
        let p = ModelParams {
            alpha: 0.0,
            ..ModelParams::calibrated().unwrap()
        };
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let stepper = PureSplit::new(&h, &[], 0.05);
        let psi0 = initial_state(&p, &g).unwrap();
        let mut jumped = TrajectoryState::new(psi0.clone(), 0);
        let mut quiet = TrajectoryState::new(psi0, 0);
        // rate at the admissible edge so jumps fire often
        let gamma = 2.0;
        let mut rng_a = trajectory_rng(3, 0);
        let mut rng_b = trajectory_rng(3, 0);
        for _ in 0..40 {
            jump_step(&mut jumped, &stepper, gamma, &mut rng_a).unwrap();
            jump_step(&mut quiet, &stepper, 0.0, &mut rng_b).unwrap();
        }
        let overlap = jumped.psi.inner(&quiet.psi).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_large_step_is_rejected() {
        let p = ModelParams::calibrated().unwrap();
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let stepper = PureSplit::new(&h, &[], 0.2);
        let mut state = TrajectoryState::new(initial_state(&p, &g).unwrap(), 0);
        let err = jump_step(&mut state, &stepper, 2.0, &mut trajectory_rng(0, 0)).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let p = ModelParams::calibrated().unwrap();
        let g = build_grid(&p, 256, default_padding(&p)).unwrap();
        let h = build_hamiltonian(&p, &g).unwrap();
        let sinks = default_sinks(&p, &g).unwrap();
        let psi = initial_state(&p, &g).unwrap();
        let setup = EnsembleSetup {
            hamiltonian: &h,
            sinks: &sinks,
            initial: &psi,
            dt: 0.2,
            t_final: 300.0,
            checkpoints: vec![100.0, 300.0],
            transit_threshold: Some(p.delta_x * 0.6),
        };
        let schedule = crate::lindblad::SchedulePreset::PulsedSingleTransit
            .schedule(2.0, crate::lindblad::EdgeShape::Rectangular)
            .unwrap();
        let a = run_ensemble(&setup, &schedule, 8, 42).unwrap();
        let b = run_ensemble(&setup, &schedule, 8, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cis + a.trans + a.unresolved, 8);
        let one = run_ensemble(&setup, &schedule, 1, 7).unwrap();
        assert_eq!(one, run_ensemble(&setup, &schedule, 1, 7).unwrap());
    }
}
