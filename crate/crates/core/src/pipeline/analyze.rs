use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use super::{read_results, results_path, write_atomic, PipelineError, ResultRecord, RunConfig, Solver, Status};
use crate::analytics::report::{render_all, Provenance};
use crate::analytics::{DifficultyRecord, T99};
use crate::CODE_VERSION;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeSummary {
    pub records: usize,
    /// Instances left out because some measure failed or is missing.
    pub dropped: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Joins the solver result files into one record per instance. Returns the
/// records, the ids dropped for missing or failed measures, and the shared
/// dataset hash. Mixed hashes are refused unless `force`.
pub fn load_difficulty_records(
    cfg: &RunConfig,
    force: bool,
) -> Result<(Vec<DifficultyRecord>, Vec<String>, String), PipelineError> {
    let mut files: BTreeMap<Solver, Vec<ResultRecord>> = BTreeMap::new();
    for solver in Solver::ALL {
        let path = results_path(cfg, solver);
        let recs = read_results(&path)?;
        if recs.is_empty() && solver != Solver::Twosat {
            return Err(PipelineError::Data(format!(
                "missing {} measure: no records in {}",
                solver.name(),
                path.display()
            )));
        }
        files.insert(solver, recs);
    }

    let config_hash = cfg.hash();
    let first = &files[&Solver::Qw][0];
    let dataset_hash = first.dataset_hash.clone();
    if !force {
        for r in files.values().flatten() {
            if r.dataset_hash != dataset_hash || r.config_hash != config_hash || r.code_version != CODE_VERSION {
                return Err(PipelineError::Data(format!(
                    "{} result for {} comes from another dataset, configuration or version; use --force to mix",
                    r.solver.name(),
                    r.instance_id
                )));
            }
        }
    }

    let mut merged: BTreeMap<String, DifficultyRecord> = BTreeMap::new();
    let mut broken = BTreeSet::new();
    for (solver, recs) in &files {
        for r in recs {
            let d = merged
                .entry(r.instance_id.clone())
                .or_insert_with(|| DifficultyRecord::new(r.instance_id.clone(), r.n));
            if r.status == Status::Error {
                if *solver != Solver::Twosat {
                    broken.insert(r.instance_id.clone());
                }
                continue;
            }
            match solver {
                Solver::Qw => {
                    d.p_avg = r.p_avg;
                    d.p_infinity = r.p_infinity;
                }
                Solver::Aqc => {
                    d.t99 = Some(match (r.status, r.t99) {
                        (Status::Ok, Some(t)) => T99::Found(t),
                        _ => T99::NotFound,
                    });
                }
                Solver::Classical => {
                    d.n_calls = r.n_calls;
                    if d.satisfiable.is_none() {
                        d.satisfiable = r.best_unsatisfied.map(|u| u == 0);
                    }
                }
                Solver::Twosat => d.satisfiable = r.satisfiable.or(d.satisfiable),
            }
        }
    }
    let mut dropped = Vec::new();
    let mut records = Vec::new();
    for (id, d) in merged {
        if broken.contains(&id) || d.p_avg.is_none() || d.t99.is_none() || d.n_calls.is_none() {
            dropped.push(id);
        } else {
            records.push(d);
        }
    }
    Ok((records, dropped, dataset_hash))
}

/// Writes the figure tables and `summary.txt` into the analysis directory.
pub fn analyze(cfg: &RunConfig, force: bool) -> Result<AnalyzeSummary, PipelineError> {
    let (records, dropped, dataset_hash) = load_difficulty_records(cfg, force)?;
    let prov = Provenance {
        dataset_hash,
        config_hash: cfg.hash(),
        code_version: CODE_VERSION.to_string(),
    };
    let tables = render_all(&records, &prov, &cfg.report_options()).map_err(|e| PipelineError::Data(e.to_string()))?;
    let dir = cfg.analysis_dir();
    let mut files = Vec::new();
    for (name, body) in tables {
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        files.push(path);
    }
    Ok(AnalyzeSummary {
        records: records.len(),
        dropped,
        files,
    })
}
