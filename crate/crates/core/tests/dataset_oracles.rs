use m2s_core::analytics::{lower_median, portfolio_eval, DifficultyRecord, Measure, Normalizer};
use m2s_core::classical::{
    integer_bound, mixing_lower_bound, mixbandb_solve, round_assignment, simplify, two_sat_satisfiable, BnbConfig,
    MixingConfig,
};
use m2s_core::dynamics::{qw_average_probability, EvolveOptions, TimeWindow, WalkConfig};
use m2s_core::encoding::{build_energy_table, heuristic_gamma};
use m2s_core::instance::{
    brute_force_optima, generate_dataset, generate_instance, optimum_summary, Assignment, Instance,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn brute_force_best_equals_table_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let inst = generate_instance(8, 24, &mut rng).unwrap();
        let (best, optima) = brute_force_optima(&inst).unwrap();
        let table = build_energy_table(&inst).unwrap();
        assert_eq!(best, 24 - table.min_energy() as usize);
        assert_eq!(optima.len(), table.ground_degeneracy());
    }
}

#[test]
fn kept_instances_are_canonical_with_exact_density() {
    for n in [5, 7, 9] {
        let ds = generate_dataset(n, 300, 3, 22).unwrap();
        for inst in &ds.instances {
            assert_eq!(inst.m(), 3 * n);
            assert!(inst.canonicalized);
            let opt = optimum_summary(inst).unwrap();
            assert_eq!((opt.count, opt.first_index), (1, 0), "{}", inst.id);
        }
    }
}

#[test]
fn satisfiable_fraction_falls_with_n() {
    let frac = |n| {
        let ds = generate_dataset(n, 2000, 3, 23).unwrap();
        let sat = ds.instances.iter().filter(|i| two_sat_satisfiable(i)).count();
        sat as f64 / ds.kept() as f64
    };
    let (f5, f8) = (frac(5), frac(8));
    assert!(f8 < f5, "n=5 {f5} vs n=8 {f8}");
}

#[test]
fn kept_fraction_is_stable_across_seeds() {
    let attempts = 500;
    let kept: Vec<usize> = (0..10).map(|s| generate_dataset(5, attempts, 3, 100 + s).unwrap().kept()).collect();
    let p = kept.iter().sum::<usize>() as f64 / (10 * attempts) as f64;
    let sigma = (attempts as f64 * p * (1.0 - p)).sqrt();
    for k in kept {
        assert!((k as f64 - attempts as f64 * p).abs() < 3.0 * sigma, "{k} vs {p}");
    }
}

#[test]
fn solvers_agree_with_exhaustive_search_on_datasets() {
    for n in 4..=10 {
        let ds = generate_dataset(n, 150, 3, 24).unwrap();
        for inst in &ds.instances {
            let (best, _) = brute_force_optima(inst).unwrap();
            let rec = mixbandb_solve(inst, &BnbConfig::default());
            assert_eq!(rec.best_unsatisfied as usize, inst.m() - best, "{}", inst.id);
            assert_eq!(two_sat_satisfiable(inst), best == inst.m(), "{}", inst.id);
        }
    }
}

fn residual_case() -> impl Strategy<Value = (Instance, Vec<Option<bool>>, u64)> {
    (3usize..=10, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=(4 * n).min(2 * n * (n - 1)));
        let inst = generate_instance(n, m, &mut rng).unwrap();
        let partial = (0..n)
            .map(|_| rng.random_bool(0.3).then(|| rng.random_bool(0.5)))
            .collect();
        (inst, partial, seed)
    })
}

fn completion_optimum(inst: &Instance, partial: &[Option<bool>]) -> u32 {
    let free: Vec<usize> = (0..inst.n()).filter(|&i| partial[i].is_none()).collect();
    (0..1u32 << free.len())
        .map(|mask| {
            let mut full = partial.to_vec();
            for (j, &i) in free.iter().enumerate() {
                full[i] = Some(mask >> j & 1 == 1);
            }
            simplify(inst, &full).already_unsat()
        })
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn residual_bounds_sandwich_the_optimum((inst, partial, seed) in residual_case()) {
        let r = simplify(&inst, &partial);
        let opt = completion_optimum(&inst, &partial) - r.already_unsat();
        if r.is_empty() {
            prop_assert_eq!(opt, 0);
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bound, state) = mixing_lower_bound(&r, &MixingConfig::default(), &mut rng);
        prop_assert!(bound <= opt);
        prop_assert!(integer_bound(state.objective) <= opt);
        let rounded = round_assignment(&r, &state, 20, &mut rng);
        prop_assert!(rounded.unsatisfied >= opt);
    }
}

#[test]
fn satisfiable_instances_need_fewer_calls_at_n8() {
    let ds = generate_dataset(8, 2000, 3, 25).unwrap();
    let (mut sat, mut unsat) = (Vec::new(), Vec::new());
    for inst in &ds.instances {
        let calls = mixbandb_solve(inst, &BnbConfig::default()).n_calls as f64;
        if two_sat_satisfiable(inst) {
            sat.push(calls);
        } else {
            unsat.push(calls);
        }
    }
    let (s, u) = (lower_median(&sat).unwrap(), lower_median(&unsat).unwrap());
    assert!(s <= u, "sat median {s} vs unsat {u} ({} / {})", sat.len(), unsat.len());
}

#[test]
fn speedups_are_reproducible() {
    let run = || {
        let ds = generate_dataset(8, 400, 3, 26).unwrap();
        let tables: Vec<_> = ds.instances.iter().map(|i| build_energy_table(i).unwrap()).collect();
        let gamma = heuristic_gamma(&tables).unwrap();
        let walk = WalkConfig {
            gamma,
            window: TimeWindow::default(),
        };
        let records: Vec<DifficultyRecord> = ds
            .instances
            .iter()
            .zip(&tables)
            .take(40)
            .map(|(inst, table)| {
                let mut r = DifficultyRecord::new(inst.id.clone(), 8);
                r.p_avg = Some(qw_average_probability(inst, table, &walk, &EvolveOptions::default()).unwrap().p_avg);
                r.n_calls = Some(mixbandb_solve(inst, &BnbConfig::default()).n_calls);
                r
            })
            .collect();
        let s = portfolio_eval(&records, Measure::Qw, Measure::Classical, Normalizer::MedianAtN).unwrap();
        s.entries.iter().map(|e| (e.speedup_a.to_bits(), e.speedup_b.to_bits())).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn canonicalization_keeps_the_optimum_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..50 {
        let inst = generate_instance(7, 21, &mut rng).unwrap();
        let (best, optima) = brute_force_optima(&inst).unwrap();
        let canon = m2s_core::instance::canonicalize_to_zero(&inst, &optima[0]).unwrap();
        let (best_c, optima_c) = brute_force_optima(&canon).unwrap();
        assert_eq!(best, best_c);
        assert_eq!(optima.len(), optima_c.len());
        assert!(optima_c.contains(&Assignment::all_zeros(7)));
    }
}
