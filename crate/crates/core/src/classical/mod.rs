//! Classical solvers: the 2-SAT decision procedure and an exact branch and
//! bound for MAX 2-SAT driven by low-rank semidefinite lower bounds.

mod bnb;
mod mixing;
mod twosat;

pub use bnb::{mixbandb_solve, AuditReport, BnbConfig, ClassicalRunRecord};
pub use mixing::{
    integer_bound, mixing_lower_bound, relaxation_dimension, round_assignment, Mixer, MixingConfig, Rounding,
    VectorRelaxationState,
};
pub use twosat::two_sat_satisfiable;

use crate::instance::{Instance, Literal};

/// Clauses left after fixing some variables. Satisfied clauses are gone,
/// falsified literals are removed, and clauses with no literal left are
/// counted in `already_unsat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    n: usize,
    vars: Vec<usize>,
    binaries: Vec<(Literal, Literal)>,
    units: Vec<Literal>,
    already_unsat: u32,
}

impl Residual {
    /// Variable count of the original instance.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Free variables occurring in some residual clause, ascending.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn binaries(&self) -> &[(Literal, Literal)] {
        &self.binaries
    }

    pub fn units(&self) -> &[Literal] {
        &self.units
    }

    pub fn already_unsat(&self) -> u32 {
        self.already_unsat
    }

    pub fn is_empty(&self) -> bool {
        self.binaries.is_empty() && self.units.is_empty()
    }

    /// Unsatisfied residual clauses under `truth(var)`.
    pub fn unsatisfied(&self, truth: impl Fn(usize) -> bool) -> u32 {
        let holds = |l: Literal| truth(l.var()) == l.is_positive();
        let b = self.binaries.iter().filter(|(a, b)| !holds(*a) && !holds(*b)).count();
        let u = self.units.iter().filter(|&&a| !holds(a)).count();
        (b + u) as u32
    }

    /// Number of residual clauses containing each literal, indexed
    /// `[var][negative as usize]`.
    fn occurrences(&self) -> Vec<[u32; 2]> {
        let mut occ = vec![[0u32; 2]; self.n + 1];
        for l in self.binaries.iter().flat_map(|&(a, b)| [a, b]).chain(self.units.iter().copied()) {
            occ[l.var()][usize::from(!l.is_positive())] += 1;
        }
        occ
    }

    /// Variables whose value can be fixed without losing optimality: if the
    /// unit clauses on `x` are at least as many as all clauses containing
    /// `¬x`, setting `x` true never hurts.
    pub fn dominated_literals(&self) -> Vec<Literal> {
        let occ = self.occurrences();
        let mut unit_count = vec![[0u32; 2]; self.n + 1];
        for l in &self.units {
            unit_count[l.var()][usize::from(!l.is_positive())] += 1;
        }
        let mut forced = Vec::new();
        for &v in &self.vars {
            let code = v as i32;
            if unit_count[v][0] > 0 && unit_count[v][0] >= occ[v][1] {
                forced.push(Literal::new(code).unwrap());
            } else if unit_count[v][1] > 0 && unit_count[v][1] >= occ[v][0] {
                forced.push(Literal::new(-code).unwrap());
            }
        }
        forced
    }

    /// Free variable with the most residual occurrences, lowest index on ties.
    pub fn most_frequent_var(&self) -> Option<usize> {
        let occ = self.occurrences();
        self.vars
            .iter()
            .copied()
            .max_by_key(|&v| (occ[v][0] + occ[v][1], std::cmp::Reverse(v)))
    }
}

/// One pass over the clause list under a partial assignment
/// (`partial[var - 1]`, `Some(true)` meaning the variable is true).
pub fn simplify(instance: &Instance, partial: &[Option<bool>]) -> Residual {
    assert_eq!(partial.len(), instance.n());
    let value = |l: Literal| partial[l.var() - 1].map(|t| t == l.is_positive());
    let mut r = Residual {
        n: instance.n(),
        vars: Vec::new(),
        binaries: Vec::new(),
        units: Vec::new(),
        already_unsat: 0,
    };
    let mut seen = vec![false; instance.n() + 1];
    for c in instance.clauses() {
        let (a, b) = (c.first(), c.second());
        match (value(a), value(b)) {
            (Some(true), _) | (_, Some(true)) => continue,
            (Some(false), Some(false)) => r.already_unsat += 1,
            (Some(false), None) => r.units.push(b),
            (None, Some(false)) => r.units.push(a),
            (None, None) => r.binaries.push((a, b)),
        }
    }
    for l in r.binaries.iter().flat_map(|&(a, b)| [a, b]).chain(r.units.iter().copied()) {
        seen[l.var()] = true;
    }
    r.vars = (1..=instance.n()).filter(|&v| seen[v]).collect();
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::worked_example;

    #[test]
    fn simplify_counts_and_shrinks() {
        let inst = worked_example();
        // x1 = true: (1,2),(1,-3) satisfied; (-1,2)->2, (-1,3)->3
        let r = simplify(&inst, &[Some(true), None, None]);
        assert_eq!(r.already_unsat(), 0);
        assert_eq!(r.units().len(), 2);
        assert_eq!(r.binaries().len(), 2);
        assert_eq!(r.vars(), &[2, 3]);
        let r = simplify(&inst, &[Some(true), Some(false), Some(false)]);
        assert_eq!(r.already_unsat(), 2);
        assert!(r.is_empty());
        assert!(r.vars().is_empty());
    }

    #[test]
    fn domination_rule_is_sound_on_small_residuals() {
        use crate::instance::generate_instance;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.random_range(3..8);
            let inst = generate_instance(n, 3 * n, &mut rng).unwrap();
            let partial: Vec<Option<bool>> = (0..n)
                .map(|_| if rng.random_bool(0.3) { Some(rng.random_bool(0.5)) } else { None })
                .collect();
            let best = |p: &[Option<bool>]| {
                let free: Vec<usize> = (0..n).filter(|&i| p[i].is_none()).collect();
                (0..1u32 << free.len())
                    .map(|mask| {
                        let mut full = p.to_vec();
                        for (j, &i) in free.iter().enumerate() {
                            full[i] = Some(mask >> j & 1 == 1);
                        }
                        let r = simplify(&inst, &full);
                        r.already_unsat()
                    })
                    .min()
                    .unwrap()
            };
            let r = simplify(&inst, &partial);
            let mut fixed = partial.clone();
            for l in r.dominated_literals() {
                fixed[l.var() - 1] = Some(l.is_positive());
            }
            assert_eq!(best(&partial), best(&fixed));
        }
    }
}
