use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::{load_dataset, worker_count, DatasetEntry, PipelineError, RunConfig};
use crate::classical::{mixbandb_solve, two_sat_satisfiable};
use crate::encoding::{build_energy_table, build_ising};
use crate::instance::{count_satisfied, optimum_summary, Assignment, Instance, BRUTE_FORCE_MAX_N};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub checked: usize,
    /// `"<id>: <what disagreed>"`, in manifest order.
    pub mismatches: Vec<String>,
    /// Per `n`: instance count and mean seconds per instance.
    pub timing: BTreeMap<usize, (usize, f64)>,
}

fn check_instance(inst: &Instance, cfg: &RunConfig) -> Vec<String> {
    let mut bad = Vec::new();
    let n = inst.n();
    let m = inst.m();
    let table = match build_energy_table(inst) {
        Ok(t) => t,
        Err(e) => return vec![format!("energy table: {e}")],
    };
    let ising = build_ising(inst);
    for k in 0..1u64 << n {
        let direct = m - count_satisfied(inst, &Assignment::from_index(n, k)).expect("length matches");
        if table.energies()[k as usize] as usize != direct {
            bad.push(format!("energy table entry {k} is {} but {direct} clauses fail", table.energies()[k as usize]));
            break;
        }
        if ising.energy_quarters(k) != 4 * direct as i64 {
            bad.push(format!("ising energy at {k} is {} but {direct} clauses fail", ising.energy(k)));
            break;
        }
    }
    let opt = optimum_summary(inst).expect("size checked by caller");
    let best_unsat = (m - opt.best_satisfied) as u32;
    let bnb = mixbandb_solve(inst, &cfg.bnb_config());
    if bnb.best_unsatisfied != best_unsat {
        bad.push(format!(
            "branch and bound optimum leaves {} unsatisfied, exhaustive search {best_unsat}",
            bnb.best_unsatisfied
        ));
    } else if count_satisfied(inst, &bnb.best_assignment).ok() != Some(opt.best_satisfied) {
        bad.push("branch and bound assignment does not attain its reported value".into());
    }
    if two_sat_satisfiable(inst) != (best_unsat == 0) {
        bad.push(format!("2-SAT decision disagrees with exhaustive optimum ({best_unsat} unsatisfied)"));
    }
    if inst.canonicalized && !(opt.count == 1 && opt.first_index == 0) {
        bad.push(format!(
            "marked canonical but has {} optima, first at index {}",
            opt.count, opt.first_index
        ));
    }
    bad
}

fn check_entry(entry: &DatasetEntry, cfg: &RunConfig) -> (Option<usize>, f64, Vec<String>) {
    let start = Instant::now();
    let inst = match &entry.instance {
        Ok(i) => i,
        Err(msg) => return (None, 0.0, vec![format!("{}: unreadable: {msg}", entry.id)]),
    };
    if inst.n() > BRUTE_FORCE_MAX_N {
        return (None, 0.0, vec![format!("{}: n = {} beyond exhaustive limit", entry.id, inst.n())]);
    }
    let bad = check_instance(inst, cfg)
        .into_iter()
        .map(|m| format!("{}: {m}", entry.id))
        .collect();
    (Some(inst.n()), start.elapsed().as_secs_f64(), bad)
}

/// Every exhaustive cross-check over the dataset in `dataset_dir`.
/// Mismatches are reported, not raised; see [`OracleReport::into_result`].
pub fn oracle(cfg: &RunConfig, dataset_dir: &Path) -> Result<OracleReport, PipelineError> {
    let dataset = load_dataset(dataset_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(cfg))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| dataset.entries.par_iter().map(|e| check_entry(e, cfg)).collect());
    let mut timing: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    let mut mismatches = Vec::new();
    for (n, secs, bad) in outcomes {
        if let Some(n) = n {
            let slot = timing.entry(n).or_default();
            slot.0 += 1;
            slot.1 += secs;
        }
        mismatches.extend(bad);
    }
    for (count, total) in timing.values_mut() {
        *total /= *count as f64;
    }
    Ok(OracleReport {
        checked: dataset.entries.len(),
        mismatches,
        timing,
    })
}

impl OracleReport {
    pub fn into_result(self) -> Result<Self, PipelineError> {
        match self.mismatches.first() {
            None => Ok(self),
            Some(first) => Err(PipelineError::OracleMismatch {
                count: self.mismatches.len(),
                first: first.clone(),
            }),
        }
    }
}
