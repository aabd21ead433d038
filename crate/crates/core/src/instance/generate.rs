use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    canonicalize_to_zero, optimum_summary, Assignment, Clause, Instance, InstanceError, Literal,
    BRUTE_FORCE_MAX_N,
};

pub const DEFAULT_CLAUSE_FACTOR: usize = 3;

/// Draws `m` distinct clauses by rejection: two distinct variables chosen
/// uniformly, each sign a fair coin, duplicates (as unordered pairs) redrawn.
pub fn generate_instance<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Instance, InstanceError> {
    let max = 2 * n * n.saturating_sub(1);
    if n == 0 || m > max {
        return Err(InstanceError::InfeasibleClauseCount { n, m, max });
    }
    let mut seen = HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let a = rng.random_range(1..=n);
        let mut b = rng.random_range(1..n);
        if b >= a {
            b += 1;
        }
        let sa = if rng.random_bool(0.5) { 1 } else { -1 };
        let sb = if rng.random_bool(0.5) { 1 } else { -1 };
        let clause = Clause::new(Literal(sa * a as i32), Literal(sb * b as i32))?;
        if seen.insert(clause) {
            clauses.push(clause);
        }
    }
    Instance::new(n, clauses)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-attempt stream seed; depends only on its inputs so attempts can be
/// generated in any order.
pub fn derive_instance_seed(master_seed: u64, n: usize, attempt: u64) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ (n as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    splitmix64(h ^ attempt.wrapping_mul(0x9FB2_1C65_1E98_DF25))
}

pub fn instance_id(n: usize, master_seed: u64, attempt: u64) -> String {
    format!("m2s-n{n}-s{master_seed}-a{attempt}")
}

/// Result of a generation sweep at one variable count.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub n: usize,
    pub attempted: usize,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn kept(&self) -> usize {
        self.instances.len()
    }
}

/// The raw instance drawn at one generation attempt, before the uniqueness
/// filter and canonicalization.
pub fn generated_instance(n: usize, m: usize, master_seed: u64, attempt: u64) -> Result<Instance, InstanceError> {
    let seed = derive_instance_seed(master_seed, n, attempt);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = generate_instance(n, m, &mut rng)?;
    inst.seed = Some(seed);
    inst.attempt = Some(attempt);
    inst.id = instance_id(n, master_seed, attempt);
    Ok(inst)
}

fn attempt_one(n: usize, m: usize, master_seed: u64, attempt: u64) -> Result<Option<Instance>, InstanceError> {
    let inst = generated_instance(n, m, master_seed, attempt)?;
    let summary = optimum_summary(&inst)?;
    if summary.count != 1 {
        return Ok(None);
    }
    let optimum = Assignment::from_index(n, summary.first_index);
    canonicalize_to_zero(&inst, &optimum).map(Some)
}

/// Makes `target_count` generation attempts with `m = clause_factor * n`,
/// keeping the canonicalized instances that have a unique optimum.
pub fn generate_dataset(
    n: usize,
    target_count: usize,
    clause_factor: usize,
    master_seed: u64,
) -> Result<Dataset, InstanceError> {
    if !(2..=BRUTE_FORCE_MAX_N).contains(&n) {
        return Err(InstanceError::BudgetExceeded {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let m = clause_factor * n;
    let results: Vec<Option<Instance>> = (0..target_count as u64)
        .into_par_iter()
        .map(|a| attempt_one(n, m, master_seed, a))
        .collect::<Result<_, _>>()?;
    Ok(Dataset {
        n,
        attempted: target_count,
        instances: results.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::has_unique_optimum;

    #[test]
    fn exact_clause_count_and_distinctness() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = generate_instance(3, 6, &mut rng).unwrap();
        assert_eq!(inst.m(), 6);
        assert_eq!(inst.n(), 3);
        // densest possible instance
        let full = generate_instance(3, 12, &mut rng).unwrap();
        assert_eq!(full.m(), 12);
    }

    #[test]
    fn infeasible_clause_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            generate_instance(3, 13, &mut rng),
            Err(InstanceError::InfeasibleClauseCount { max: 12, .. })
        ));
        assert!(generate_instance(1, 1, &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_clauses() {
        let a = generate_instance(20, 60, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = generate_instance(20, 60, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a.clauses(), b.clauses());
    }

    #[test]
    fn both_positive_fraction_is_a_quarter() {
        // 10^4 instances of 15 clauses; each clause is both-positive with p = 1/4
        // (sign choices are independent of duplicate rejection by symmetry).
        let mut both = 0usize;
        let mut total = 0usize;
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_instance_seed(3, 5, seed));
            let inst = generate_instance(5, 15, &mut rng).unwrap();
            for c in inst.clauses() {
                total += 1;
                if c.first().is_positive() && c.second().is_positive() {
                    both += 1;
                }
            }
        }
        let p = 0.25;
        let mean = total as f64 * p;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        assert!((both as f64 - mean).abs() < 3.0 * sigma, "{both} vs {mean} +- {sigma}");
    }

    #[test]
    fn dataset_filter_and_determinism() {
        let d = generate_dataset(5, 1000, 3, 11).unwrap();
        assert_eq!(d.attempted, 1000);
        assert!(d.kept() < 1000 && d.kept() > 0);
        for inst in &d.instances {
            assert!(has_unique_optimum(inst).unwrap());
            assert!(inst.canonicalized);
            assert_eq!(inst.m(), 15);
            assert_eq!(optimum_summary(inst).unwrap().first_index, 0);
        }
        let again = generate_dataset(5, 1000, 3, 11).unwrap();
        let ids: Vec<_> = d.instances.iter().map(|i| i.id.clone()).collect();
        let ids2: Vec<_> = again.instances.iter().map(|i| i.id.clone()).collect();
        assert_eq!(ids, ids2);
    }

    #[test]
    fn dataset_is_independent_of_thread_count() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let multi = pool.install(|| generate_dataset(6, 300, 3, 5).unwrap());
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| generate_dataset(6, 300, 3, 5).unwrap());
        assert_eq!(multi.instances, single.instances);
    }
}
