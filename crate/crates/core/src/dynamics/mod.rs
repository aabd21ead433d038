//! Closed-system Schrödinger evolution under `H(t) = a(t)·H_driver + b(t)·H_problem`
//! from the uniform superposition, and the success-probability measures built
//! on it: the window-averaged quantum-walk probability, the linear-schedule
//! anneal probability and the shortest anneal reaching 99%.
//!
//! Time is measured in units where one unsatisfied clause costs unit energy
//! (ħ = 1).

pub mod dense;
mod dop853;
mod t99;

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::EnergyTable;
use crate::instance::Instance;

pub use dense::{qw_infinite_time_average, P_INF_MAX_N};
pub use dop853::{IntegrationStats, StepLimits, Tolerance};
pub use t99::{find_t99, find_t99_with, AqcResult, T99Options, T99Search};

/// Largest tolerated deviation of the state norm from one.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("norm drifted by {drift:e} at t = {time}")]
    NormDriftExceeded { time: f64, drift: f64 },
    #[error("step limit of {steps} reached at t = {time}")]
    StepLimitExceeded { steps: usize, time: f64 },
    #[error("wall-clock budget exhausted at t = {time}")]
    WallClockExceeded { time: f64 },
    #[error("step size underflow at t = {time}")]
    StepSizeUnderflow { time: f64 },
    #[error("dense diagonalization limited to n <= {max}, got n = {n}")]
    BudgetExceeded { n: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl DynamicsError {
    /// Errors that mean "ran out of budget" rather than "numerics failed".
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            DynamicsError::StepLimitExceeded { .. } | DynamicsError::WallClockExceeded { .. }
        )
    }
}

/// `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Equal superposition of all basis states, the driver ground state.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = 1.0 / (dim as f64).sqrt();
        StateVector {
            n,
            amplitudes: vec![Complex64::new(a, 0.0); dim],
        }
    }

    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(amplitudes.len(), 1 << n);
        StateVector { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &[Complex64]) -> f64 {
        self.amplitudes
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Control functions `(a(t), b(t))` weighting driver and problem Hamiltonians.
pub trait Blend {
    fn coefficients(&self, t: f64) -> (f64, f64);

    /// `(∫a, ∫b)` over `[t0, t1]` when known in closed form. Enables a
    /// time-dependent energy shift whose global phase is removed exactly.
    fn integrals(&self, _t0: f64, _t1: f64) -> Option<(f64, f64)> {
        None
    }
}

/// Time-independent blend, the quantum-walk Hamiltonian `γ·H_driver + H_problem`
/// when `driver = γ` and `problem = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBlend {
    pub driver: f64,
    pub problem: f64,
}

impl ConstantBlend {
    pub fn walk(gamma: f64) -> Self {
        ConstantBlend {
            driver: gamma,
            problem: 1.0,
        }
    }
}

impl Blend for ConstantBlend {
    fn coefficients(&self, _t: f64) -> (f64, f64) {
        (self.driver, self.problem)
    }

    fn integrals(&self, t0: f64, t1: f64) -> Option<(f64, f64)> {
        Some((self.driver * (t1 - t0), self.problem * (t1 - t0)))
    }
}

/// Linear anneal `A(t) = 1 − t/t_f`, `B(t) = t/t_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    total_time: f64,
}

impl AnnealSchedule {
    pub fn linear(total_time: f64) -> Result<Self, DynamicsError> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!(
                "anneal time must be positive, got {total_time}"
            )));
        }
        Ok(AnnealSchedule { total_time })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }
}

impl Blend for AnnealSchedule {
    fn coefficients(&self, t: f64) -> (f64, f64) {
        let s = t / self.total_time;
        (1.0 - s, s)
    }

    fn integrals(&self, t0: f64, t1: f64) -> Option<(f64, f64)> {
        let b = (t1 * t1 - t0 * t0) / (2.0 * self.total_time);
        Some(((t1 - t0) - b, b))
    }
}

/// Arbitrary closure blend (no energy shift).
pub struct FnBlend<F>(pub F);

impl<F: Fn(f64) -> (f64, f64)> Blend for FnBlend<F> {
    fn coefficients(&self, t: f64) -> (f64, f64) {
        (self.0)(t)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub tolerance: Tolerance,
    pub limits: StepLimits,
    /// Subtract `a(t)·(−n) + b(t)·E_min` from the Hamiltonian during
    /// integration; only a global phase, removed again on output.
    pub energy_shift: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tolerance: Tolerance::default(),
            limits: StepLimits::default(),
            energy_shift: true,
        }
    }
}

impl EvolveOptions {
    pub fn with_tolerance(tolerance: Tolerance) -> Self {
        EvolveOptions {
            tolerance,
            ..Default::default()
        }
    }
}

/// One accepted step as seen by an observer. The stored amplitudes may carry
/// a global phase relative to the true state; probabilities are unaffected.
pub struct StepView<'a> {
    pub time: f64,
    amplitudes: &'a [Complex64],
    phase: Complex64,
}

impl StepView<'_> {
    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn state(&self, n: usize) -> StateVector {
        StateVector::from_amplitudes(n, self.amplitudes.iter().map(|a| a * self.phase).collect())
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub final_state: StateVector,
    pub stats: IntegrationStats,
    pub max_norm_drift: f64,
}

struct Hamiltonian<'a, B: Blend> {
    energies: &'a [f64],
    blend: &'a B,
    shift: (f64, f64),
}

impl<B: Blend> dop853::System for Hamiltonian<'_, B> {
    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let (a, b) = self.blend.coefficients(t);
        let c = a * self.shift.0 + b * self.shift.1;
        let dim = y.len();
        for k in 0..dim {
            // −i[(b·E_k − c)·y_k − a·Σ_flip y]
            let mut flips = Complex64::new(0.0, 0.0);
            let mut bit = 1;
            while bit < dim {
                flips += y[k ^ bit];
                bit <<= 1;
            }
            let h = (b * self.energies[k] - c) * y[k] - a * flips;
            dy[k] = Complex64::new(h.im, -h.re);
        }
    }
}

/// Integrates from `initial` over `t_span`, passing every accepted step to
/// `observer`. Aborts when the norm drifts beyond [`NORM_DRIFT_LIMIT`].
pub fn evolve_from<B, F>(
    table: &EnergyTable,
    blend: &B,
    t_span: (f64, f64),
    initial: StateVector,
    options: &EvolveOptions,
    mut observer: F,
) -> Result<EvolveOutcome, DynamicsError>
where
    B: Blend,
    F: FnMut(&StepView<'_>),
{
    let (t0, t1) = t_span;
    if initial.n() != table.n() {
        return Err(DynamicsError::InvalidParameter(format!(
            "state has n = {}, table has n = {}",
            initial.n(),
            table.n()
        )));
    }
    if !(options.tolerance.rtol > 0.0 && options.tolerance.atol > 0.0) {
        return Err(DynamicsError::InvalidParameter("tolerances must be positive".into()));
    }
    let energies: Vec<f64> = table.energies().iter().map(|&e| f64::from(e)).collect();
    let use_shift = options.energy_shift && blend.integrals(t0, t0).is_some();
    let shift = if use_shift {
        (-(table.n() as f64), f64::from(table.min_energy()))
    } else {
        (0.0, 0.0)
    };
    let phase_at = |t: f64| -> Complex64 {
        match blend.integrals(t0, t) {
            Some((ia, ib)) if use_shift => {
                Complex64::new(0.0, -(shift.0 * ia + shift.1 * ib)).exp()
            }
            _ => Complex64::new(1.0, 0.0),
        }
    };
    let system = Hamiltonian {
        energies: &energies,
        blend,
        shift,
    };
    let n = table.n();
    let mut y = initial.amplitudes;
    let mut max_drift: f64 = (norm(&y) - 1.0).abs();
    let mut stepper = dop853::Dop853::new(y.len());
    let stats = stepper.integrate(
        &system,
        t0,
        t1,
        &mut y,
        options.tolerance,
        options.limits,
        |t, state| {
            let drift = (norm(state) - 1.0).abs();
            max_drift = max_drift.max(drift);
            if drift > NORM_DRIFT_LIMIT {
                return Err(DynamicsError::NormDriftExceeded { time: t, drift });
            }
            observer(&StepView {
                time: t,
                amplitudes: state,
                phase: phase_at(t),
            });
            Ok(())
        },
    )?;
    let phase = phase_at(t1.max(t0));
    y.iter_mut().for_each(|a| *a *= phase);
    Ok(EvolveOutcome {
        final_state: StateVector::from_amplitudes(n, y),
        stats,
        max_norm_drift: max_drift,
    })
}

/// Evolves the uniform superposition and returns every accepted step,
/// starting with the initial state at `t_span.0`.
pub fn evolve<B: Blend>(
    table: &EnergyTable,
    blend: &B,
    t_span: (f64, f64),
    options: &EvolveOptions,
) -> Result<Vec<(f64, StateVector)>, DynamicsError> {
    let n = table.n();
    let mut trajectory = vec![(t_span.0, StateVector::uniform(n))];
    evolve_from(table, blend, t_span, StateVector::uniform(n), options, |step| {
        trajectory.push((step.time, step.state(n)));
    })?;
    Ok(trajectory)
}

/// Measurement window `[t_start, t_start + width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_start: f64,
    pub width: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow {
            t_start: 0.0,
            width: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub gamma: f64,
    pub window: TimeWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QwResult {
    pub instance_id: String,
    pub gamma: f64,
    pub p_avg: f64,
    pub p_infinity: Option<f64>,
    pub step_count: usize,
}

/// Time average of the ground-state probability over the window,
/// accumulated with the trapezoid rule over accepted integrator steps.
pub fn qw_average_probability(
    instance: &Instance,
    table: &EnergyTable,
    config: &WalkConfig,
    options: &EvolveOptions,
) -> Result<QwResult, DynamicsError> {
    let TimeWindow { t_start, width } = config.window;
    if !(config.gamma > 0.0) || !(width > 0.0) || !(t_start >= 0.0) {
        return Err(DynamicsError::InvalidParameter(format!(
            "need gamma > 0, width > 0, t_start >= 0 (got {}, {width}, {t_start})",
            config.gamma
        )));
    }
    let blend = ConstantBlend::walk(config.gamma);
    let ground = table.ground_index();
    let mut state = StateVector::uniform(table.n());
    let mut steps = 0;
    if t_start > 0.0 {
        let warmup = evolve_from(table, &blend, (0.0, t_start), state, options, |_| {})?;
        state = warmup.final_state;
        steps += warmup.stats.accepted;
    }
    let mut prev_t = t_start;
    let mut prev_p = state.probability(ground);
    let mut integral = 0.0;
    let out = evolve_from(
        table,
        &blend,
        (t_start, t_start + width),
        state,
        options,
        |step| {
            let p = step.probability(ground);
            integral += 0.5 * (step.time - prev_t) * (p + prev_p);
            prev_t = step.time;
            prev_p = p;
        },
    )?;
    steps += out.stats.accepted;
    Ok(QwResult {
        instance_id: instance.id.clone(),
        gamma: config.gamma,
        p_avg: (integral / width).clamp(0.0, 1.0),
        p_infinity: None,
        step_count: steps,
    })
}

/// Ground-state probability at the end of a linear anneal of the given length.
pub fn aqc_probability(
    table: &EnergyTable,
    schedule: &AnnealSchedule,
    options: &EvolveOptions,
) -> Result<f64, DynamicsError> {
    let out = evolve_from(
        table,
        schedule,
        (0.0, schedule.total_time()),
        StateVector::uniform(table.n()),
        options,
        |_| {},
    )?;
    Ok(out.final_state.probability(table.ground_index()))
}

pub(crate) fn deadline_after(start: Instant, budget: Option<std::time::Duration>) -> Option<Instant> {
    budget.map(|d| start + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_energy_table;
    use crate::instance::{generate_instance, Instance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_table(n: usize, seed: u64) -> (Instance, EnergyTable) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = generate_instance(n, 3 * n, &mut rng).unwrap();
        let t = build_energy_table(&inst).unwrap();
        (inst, t)
    }

    #[test]
    fn zero_clause_walk_is_stationary() {
        let inst = Instance::new(4, vec![]).unwrap();
        let table = build_energy_table(&inst).unwrap();
        let traj = evolve(&table, &ConstantBlend::walk(0.7), (0.0, 30.0), &EvolveOptions::default()).unwrap();
        for (_, s) in &traj {
            assert!((s.probability(0) - 1.0 / 16.0).abs() < 1e-10);
        }
    }

    #[test]
    fn diagonal_evolution_preserves_populations() {
        let (_, table) = random_table(5, 1);
        let blend = ConstantBlend {
            driver: 0.0,
            problem: 1.0,
        };
        let traj = evolve(&table, &blend, (0.0, 50.0), &EvolveOptions::default()).unwrap();
        for (_, s) in &traj {
            for k in 0..32 {
                assert!((s.probability(k) - 1.0 / 32.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shift_does_not_change_states() {
        let (_, table) = random_table(5, 2);
        let shifted = EvolveOptions::default();
        let plain = EvolveOptions {
            energy_shift: false,
            ..Default::default()
        };
        let sched = AnnealSchedule::linear(7.0).unwrap();
        for blend_is_walk in [true, false] {
            let (a, b) = if blend_is_walk {
                let bl = ConstantBlend::walk(1.3);
                (
                    evolve_from(&table, &bl, (0.0, 7.0), StateVector::uniform(5), &shifted, |_| {}).unwrap(),
                    evolve_from(&table, &bl, (0.0, 7.0), StateVector::uniform(5), &plain, |_| {}).unwrap(),
                )
            } else {
                (
                    evolve_from(&table, &sched, (0.0, 7.0), StateVector::uniform(5), &shifted, |_| {}).unwrap(),
                    evolve_from(&table, &sched, (0.0, 7.0), StateVector::uniform(5), &plain, |_| {}).unwrap(),
                )
            };
            assert!(a.final_state.distance(b.final_state.amplitudes()) < 1e-7);
        }
    }

    #[test]
    fn tiny_gamma_walk_average_is_uniform() {
        let (inst, table) = random_table(5, 3);
        let cfg = WalkConfig {
            gamma: 1e-12,
            window: TimeWindow::default(),
        };
        let r = qw_average_probability(&inst, &table, &cfg, &EvolveOptions::default()).unwrap();
        assert!((r.p_avg - 1.0 / 32.0).abs() < 1e-6);
    }

    #[test]
    fn window_offset_matches_manual_split() {
        let (inst, table) = random_table(4, 4);
        let opts = EvolveOptions::default();
        let cfg = WalkConfig {
            gamma: 1.0,
            window: TimeWindow {
                t_start: 5.0,
                width: 10.0,
            },
        };
        let r = qw_average_probability(&inst, &table, &cfg, &opts).unwrap();
        assert!(r.p_avg > 0.0 && r.p_avg < 1.0);
        assert!(qw_average_probability(
            &inst,
            &table,
            &WalkConfig {
                gamma: -1.0,
                window: TimeWindow::default()
            },
            &opts
        )
        .is_err());
    }

    #[test]
    fn short_anneal_stays_uniform() {
        let (_, table) = random_table(5, 5);
        let p = aqc_probability(&table, &AnnealSchedule::linear(1e-9).unwrap(), &EvolveOptions::default()).unwrap();
        assert!((p - 1.0 / 32.0).abs() < 1e-6);
        assert!(AnnealSchedule::linear(0.0).is_err());
    }

    #[test]
    fn norm_is_conserved() {
        let (_, table) = random_table(6, 6);
        let out = evolve_from(
            &table,
            &AnnealSchedule::linear(50.0).unwrap(),
            (0.0, 50.0),
            StateVector::uniform(6),
            &EvolveOptions::default(),
            |_| {},
        )
        .unwrap();
        assert!(out.max_norm_drift < NORM_DRIFT_LIMIT);
    }
}
