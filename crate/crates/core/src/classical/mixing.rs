//! Low-rank semidefinite relaxation of the residual MAX 2-SAT energy, solved
//! by cyclic coordinate minimization over unit vectors (the mixing method),
//! plus random-hyperplane rounding.
//!
//! With `s_i = +1` for a true variable, a clause `(a ∨ b)` is unsatisfied with
//! weight `(1 − σ_a s_a)(1 − σ_b s_b)/4` and a unit clause `(a)` with weight
//! `(1 − σ_a s_a)/2`. The relaxation replaces `s_i` by `v_0·v_i` and `s_i s_j`
//! by `v_i·v_j`.
//!
//! The value returned as a bound is not the primal objective, which is only
//! an upper estimate of the relaxation optimum until the iteration has
//! converged. Instead a dual certificate is built from the final vectors:
//! for any `y`, `⟨W/2, X⟩ ≥ Σ y_p + N·λ_min(W/2 − diag y)` on every feasible
//! Gram matrix `X` (unit diagonal, trace `N`), so the certified value is a
//! lower bound however far the iteration got.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Residual;
use crate::instance::Assignment;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingConfig {
    /// Vector dimension; `None` uses [`relaxation_dimension`].
    pub k: Option<usize>,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig {
            k: None,
            max_sweeps: 200,
            tol: 1e-4,
        }
    }
}

/// `ceil(sqrt(2n)) + 1`.
pub fn relaxation_dimension(n: usize) -> usize {
    let mut r = (2.0 * n as f64).sqrt().ceil() as usize;
    while r * r < 2 * n {
        r += 1;
    }
    r + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorRelaxationState {
    pub k: usize,
    /// Original variable index of each vector after the first.
    pub vars: Vec<usize>,
    /// `vectors[0]` is the truth direction, `vectors[p]` belongs to `vars[p - 1]`.
    pub vectors: Vec<Vec<f64>>,
    /// Certified lower bound on the residual minimum, in clauses.
    pub objective: f64,
    /// Relaxation objective at the final vectors.
    pub primal: f64,
    pub sweeps: usize,
}

impl VectorRelaxationState {
    fn position(&self, var: usize) -> Option<usize> {
        self.vars.binary_search(&var).ok().map(|p| p + 1)
    }

    /// `v_0·v_var`, the relaxed spin of a variable.
    pub fn spin(&self, var: usize) -> Option<f64> {
        self.position(var).map(|p| dot(&self.vectors[0], &self.vectors[p]))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Homogeneous coupling matrix (zero diagonal) and constant for the residual.
fn coupling_matrix(residual: &Residual) -> (DMatrix<f64>, f64) {
    let vars = residual.vars();
    let dim = vars.len() + 1;
    let pos = |v: usize| vars.binary_search(&v).unwrap() + 1;
    let sigma = |l: crate::instance::Literal| f64::from(l.sign());
    let mut w = DMatrix::zeros(dim, dim);
    let mut offset = 0.0;
    for &(a, b) in residual.binaries() {
        let (pa, pb) = (pos(a.var()), pos(b.var()));
        offset += 0.25;
        w[(0, pa)] -= sigma(a) / 4.0;
        w[(0, pb)] -= sigma(b) / 4.0;
        w[(pa, pb)] += sigma(a) * sigma(b) / 4.0;
    }
    for &a in residual.units() {
        offset += 0.5;
        w[(0, pos(a.var()))] -= sigma(a) / 2.0;
    }
    let upper = w.clone();
    w += upper.transpose();
    (w, offset)
}

fn gradient(w: &DMatrix<f64>, vectors: &[Vec<f64>], p: usize, g: &mut [f64]) {
    g.fill(0.0);
    for (q, v) in vectors.iter().enumerate() {
        let c = w[(p, q)];
        if q != p && c != 0.0 {
            for (gi, vi) in g.iter_mut().zip(v) {
                *gi += c * vi;
            }
        }
    }
}

fn primal(w: &DMatrix<f64>, offset: f64, vectors: &[Vec<f64>]) -> f64 {
    let mut f = offset;
    for p in 0..vectors.len() {
        for q in p + 1..vectors.len() {
            if w[(p, q)] != 0.0 {
                f += w[(p, q)] * dot(&vectors[p], &vectors[q]);
            }
        }
    }
    f
}

fn random_unit<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Incremental mixing-method solver over a residual formula.
pub struct Mixer {
    w: DMatrix<f64>,
    offset: f64,
    k: usize,
    vars: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    primal: f64,
    sweeps: usize,
    g: Vec<f64>,
}

impl Mixer {
    pub fn new<R: Rng + ?Sized>(residual: &Residual, config: &MixingConfig, rng: &mut R) -> Self {
        let (w, offset) = coupling_matrix(residual);
        let dim = w.nrows();
        let k = config.k.unwrap_or_else(|| relaxation_dimension(dim - 1)).max(2);
        let vectors: Vec<Vec<f64>> = (0..dim).map(|_| random_unit(k, rng)).collect();
        let primal = primal(&w, offset, &vectors);
        Mixer {
            w,
            offset,
            k,
            vars: residual.vars().to_vec(),
            vectors,
            primal,
            sweeps: 0,
            g: vec![0.0; k],
        }
    }

    /// One cyclic pass of coordinate updates. Returns the objective decrease.
    pub fn sweep(&mut self) -> f64 {
        self.sweeps += 1;
        for p in 0..self.vectors.len() {
            gradient(&self.w, &self.vectors, p, &mut self.g);
            let norm = dot(&self.g, &self.g).sqrt();
            if norm > 1e-12 {
                for (vi, gi) in self.vectors[p].iter_mut().zip(&self.g) {
                    *vi = -gi / norm;
                }
            }
        }
        let next = primal(&self.w, self.offset, &self.vectors);
        let decrease = self.primal - next;
        self.primal = next;
        decrease
    }

    pub fn converged(&self, decrease: f64, config: &MixingConfig) -> bool {
        decrease < config.tol * self.primal.abs().max(1.0)
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Dual certificate at the current vectors; a lower bound on the
    /// relaxation optimum whether or not the iteration has converged.
    pub fn certificate(&mut self) -> f64 {
        let dim = self.vectors.len();
        let mut m = self.w.scale(0.5);
        let mut sum_y = 0.0;
        for p in 0..dim {
            gradient(&self.w, &self.vectors, p, &mut self.g);
            let y = 0.5 * dot(&self.g, &self.vectors[p]);
            m[(p, p)] -= y;
            sum_y += y;
        }
        let lambda_min = m.symmetric_eigenvalues().min();
        (self.offset + sum_y + dim as f64 * lambda_min).min(self.primal)
    }

    pub fn state(&mut self) -> VectorRelaxationState {
        let objective = self.certificate();
        VectorRelaxationState {
            k: self.k,
            vars: self.vars.clone(),
            vectors: self.vectors.clone(),
            objective,
            primal: self.primal,
            sweeps: self.sweeps,
        }
    }
}

/// Rounds a certified relaxation value up to an integer clause count.
pub fn integer_bound(certificate: f64) -> u32 {
    (certificate - 1e-6).ceil().max(0.0) as u32
}

/// Integer lower bound on the minimum number of unsatisfied residual
/// clauses, not counting `already_unsat`.
pub fn mixing_lower_bound<R: Rng + ?Sized>(
    residual: &Residual,
    config: &MixingConfig,
    rng: &mut R,
) -> (u32, VectorRelaxationState) {
    let mut mixer = Mixer::new(residual, config, rng);
    while mixer.sweeps() < config.max_sweeps {
        let decrease = mixer.sweep();
        if mixer.converged(decrease, config) {
            break;
        }
    }
    let state = mixer.state();
    (integer_bound(state.objective), state)
}

/// Outcome of hyperplane rounding. Variables outside the residual are set
/// true in `assignment`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub assignment: Assignment,
    /// Unsatisfied residual clauses under `assignment`.
    pub unsatisfied: u32,
    pub evaluations: u64,
}

/// For each random direction `r`, sets a variable true iff `v_i·r` and
/// `v_0·r` have the same sign; keeps the assignment with the fewest
/// unsatisfied residual clauses (first one on ties).
pub fn round_assignment<R: Rng + ?Sized>(
    residual: &Residual,
    state: &VectorRelaxationState,
    rounds: usize,
    rng: &mut R,
) -> Rounding {
    let mut best: Option<(u32, Vec<bool>)> = None;
    let mut truth = vec![true; residual.n() + 1];
    for _ in 0..rounds.max(1) {
        let r = random_unit(state.k, rng);
        let side0 = dot(&state.vectors[0], &r) >= 0.0;
        for (p, &v) in state.vars.iter().enumerate() {
            truth[v] = (dot(&state.vectors[p + 1], &r) >= 0.0) == side0;
        }
        let u = residual.unsatisfied(|v| truth[v]);
        if best.as_ref().is_none_or(|(b, _)| u < *b) {
            best = Some((u, truth.clone()));
        }
    }
    let (unsatisfied, truth) = best.unwrap();
    Rounding {
        assignment: Assignment::from_truth(&truth[1..]),
        unsatisfied,
        evaluations: rounds.max(1) as u64,
    }
}
