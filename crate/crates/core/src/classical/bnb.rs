//! Depth-first branch and bound with mixing-method lower bounds.
//!
//! Problem calls: one per clause-list pass under a partial or complete
//! assignment (simplification, re-simplification after fixing dominated
//! variables, each rounding candidate) and one per sweep of the relaxation
//! solver, which reads every residual clause.
//!
//! The relaxation at a node stops as soon as its certified bound shows the
//! node cannot beat the incumbent. At the root one rounding candidate is
//! drawn after each sweep until the rounding budget is spent, so an easy
//! incumbent (a satisfying assignment in particular) ends the search early.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mixing::{integer_bound, round_assignment, Mixer, MixingConfig, VectorRelaxationState};
use super::{simplify, Residual};
use crate::instance::{Assignment, Instance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    pub mixing: MixingConfig,
    pub rounds: usize,
    pub seed: u64,
    /// Check the bound sandwich against exhaustive search at every node.
    /// Only meant for small instances.
    pub audit: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            mixing: MixingConfig::default(),
            rounds: 20,
            seed: 0,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub nodes_checked: u64,
    pub bound_violations: u64,
    pub rounding_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalRunRecord {
    pub instance_id: String,
    pub n_calls: u64,
    pub best_unsatisfied: u32,
    pub best_assignment: Assignment,
    pub node_count: u64,
    pub audit: Option<AuditReport>,
}

struct Search<'a> {
    instance: &'a Instance,
    config: &'a BnbConfig,
    rng: ChaCha8Rng,
    audit_rng: ChaCha8Rng,
    calls: u64,
    nodes: u64,
    incumbent: u32,
    best: Vec<Option<bool>>,
    audit: Option<AuditReport>,
}

fn residual_optimum(r: &Residual) -> u32 {
    let vars = r.vars();
    assert!(vars.len() <= 20, "audit needs small residuals");
    let mut truth = vec![false; r.n() + 1];
    (0..1u32 << vars.len())
        .map(|mask| {
            for (j, &v) in vars.iter().enumerate() {
                truth[v] = mask >> j & 1 == 1;
            }
            r.unsatisfied(|v| truth[v])
        })
        .min()
        .unwrap_or(0)
}

impl Search<'_> {
    fn residual(&mut self, partial: &[Option<bool>]) -> Residual {
        self.calls += 1;
        simplify(self.instance, partial)
    }

    fn record_leaf(&mut self, value: u32, partial: &[Option<bool>]) {
        if value < self.incumbent {
            self.incumbent = value;
            self.best = partial.iter().map(|v| Some(v.unwrap_or(true))).collect();
        }
    }

    fn round_into(&mut self, r: &Residual, u: u32, partial: &[Option<bool>], state: &VectorRelaxationState, rounds: usize) {
        let rounded = round_assignment(r, state, rounds, &mut self.rng);
        self.calls += rounded.evaluations;
        let mut full = partial.to_vec();
        for &v in r.vars() {
            full[v - 1] = Some(rounded.assignment.value(v));
        }
        self.record_leaf(u + rounded.unsatisfied, &full);
    }

    fn relax(&mut self, r: &Residual, u: u32, partial: &[Option<bool>]) -> (u32, VectorRelaxationState) {
        let cfg = self.config.mixing;
        let root = self.nodes == 1;
        let mut rounds_left = if root { self.config.rounds } else { 0 };
        let mut mixer = Mixer::new(r, &cfg, &mut self.rng);
        let mut bound = 0;
        while mixer.sweeps() < cfg.max_sweeps {
            let decrease = mixer.sweep();
            self.calls += 1;
            if rounds_left > 0 {
                rounds_left -= 1;
                let state = mixer.state();
                self.round_into(r, u, partial, &state, 1);
            }
            bound = integer_bound(mixer.certificate());
            if u + bound >= self.incumbent || mixer.converged(decrease, &cfg) {
                break;
            }
        }
        let state = mixer.state();
        bound = bound.max(integer_bound(state.objective));
        if rounds_left > 0 && u + bound < self.incumbent {
            self.round_into(r, u, partial, &state, rounds_left);
        }
        (bound, state)
    }

    fn node(&mut self, mut partial: Vec<Option<bool>>) {
        self.nodes += 1;
        let mut r = self.residual(&partial);
        loop {
            let forced = r.dominated_literals();
            if forced.is_empty() {
                break;
            }
            for l in forced {
                partial[l.var() - 1] = Some(l.is_positive());
            }
            r = self.residual(&partial);
        }
        let u = r.already_unsat();
        if u >= self.incumbent {
            return;
        }
        if r.is_empty() {
            self.record_leaf(u, &partial);
            return;
        }

        let (bound, state) = self.relax(&r, u, &partial);
        if let Some(audit) = self.audit.as_mut() {
            let opt = residual_optimum(&r);
            let rounded = round_assignment(&r, &state, self.config.rounds, &mut self.audit_rng);
            audit.nodes_checked += 1;
            if bound > opt || state.objective > opt as f64 + 1e-6 {
                audit.bound_violations += 1;
            }
            if rounded.unsatisfied < opt {
                audit.rounding_violations += 1;
            }
        }
        if u + bound >= self.incumbent {
            return;
        }

        let var = r.most_frequent_var().expect("nonempty residual has a free variable");
        let first = state.spin(var).unwrap_or(1.0) >= 0.0;
        for value in [first, !first] {
            let mut child = partial.clone();
            child[var - 1] = Some(value);
            self.node(child);
        }
    }
}

/// Exact MAX 2-SAT by branch and bound. Deterministic for a fixed instance
/// and configuration.
pub fn mixbandb_solve(instance: &Instance, config: &BnbConfig) -> ClassicalRunRecord {
    let n = instance.n();
    let mut search = Search {
        instance,
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        audit_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed),
        calls: 0,
        nodes: 0,
        incumbent: instance.m() as u32 + 1,
        best: vec![Some(true); n],
        audit: config.audit.then(AuditReport::default),
    };
    search.node(vec![None; n]);
    let truth: Vec<bool> = search.best.iter().map(|v| v.unwrap_or(true)).collect();
    ClassicalRunRecord {
        instance_id: instance.id.clone(),
        n_calls: search.calls,
        best_unsatisfied: search.incumbent,
        best_assignment: Assignment::from_truth(&truth),
        node_count: search.nodes,
        audit: search.audit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::two_sat_satisfiable;
    use crate::instance::{brute_force_optima, count_satisfied, generate_instance, worked_example};

    #[test]
    fn worked_example_optimum() {
        let rec = mixbandb_solve(&worked_example(), &BnbConfig::default());
        assert_eq!(rec.best_unsatisfied, 1);
        assert_eq!(count_satisfied(&worked_example(), &rec.best_assignment).unwrap(), 5);
        assert!(rec.n_calls >= 1);
        assert_eq!(rec.instance_id, "worked-example");
    }

    #[test]
    fn empty_instance() {
        let inst = Instance::new(3, vec![]).unwrap();
        let rec = mixbandb_solve(&inst, &BnbConfig::default());
        assert_eq!(rec.best_unsatisfied, 0);
        assert_eq!(rec.n_calls, 1);
        assert_eq!(rec.node_count, 1);
    }

    #[test]
    fn exact_with_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let config = BnbConfig {
            audit: true,
            ..Default::default()
        };
        for i in 0..200 {
            let n = 3 + i % 8;
            let m = ((2 + i % 4) * n).min(2 * n * (n - 1));
            let inst = generate_instance(n, m, &mut rng).unwrap();
            let (best, _) = brute_force_optima(&inst).unwrap();
            let rec = mixbandb_solve(&inst, &config);
            assert_eq!(rec.best_unsatisfied as usize, inst.m() - best);
            assert_eq!(count_satisfied(&inst, &rec.best_assignment).unwrap(), best);
            assert_eq!(rec.best_unsatisfied == 0, two_sat_satisfiable(&inst));
            let audit = rec.audit.unwrap();
            assert!(audit.nodes_checked >= 1 || rec.node_count >= 1);
            assert_eq!(audit.bound_violations, 0);
            assert_eq!(audit.rounding_violations, 0);
        }
    }

    #[test]
    fn call_count_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let inst = generate_instance(12, 36, &mut rng).unwrap();
        let a = mixbandb_solve(&inst, &BnbConfig::default());
        let b = mixbandb_solve(&inst, &BnbConfig::default());
        assert_eq!(a, b);
    }
}
