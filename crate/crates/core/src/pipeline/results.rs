use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io_err, load_dataset, write_atomic, GammaPool, PipelineError, RunConfig};
use crate::classical::{mixbandb_solve, two_sat_satisfiable};
use crate::dynamics::{find_t99, qw_average_probability, qw_infinite_time_average, DynamicsError, WalkConfig};
use crate::encoding::{build_energy_table, heuristic_gamma, EnergyTable};
use crate::instance::{generated_instance, Instance};
use crate::CODE_VERSION;

/// Overrides the configured worker count when set.
pub const WORKERS_ENV: &str = "M2S_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Qw,
    Aqc,
    Classical,
    Twosat,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Qw, Solver::Aqc, Solver::Classical, Solver::Twosat];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Qw => "qw",
            Solver::Aqc => "aqc",
            Solver::Classical => "classical",
            Solver::Twosat => "twosat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The anneal search exhausted its budget.
    NotFound,
    Error,
}

/// One line of a results file. Fields a solver does not produce are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub instance_id: String,
    pub n: usize,
    pub solver: Solver,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_avg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_infinity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t99: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_log: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_calls: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_unsatisfied: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_count: Option<u64>,
    /// Bit string, variable 1 first, `1` meaning false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_assignment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfiable: Option<bool>,
    pub config_hash: String,
    pub dataset_hash: String,
    pub code_version: String,
}

impl ResultRecord {
    fn blank(instance: &Instance, solver: Solver, config_hash: &str, dataset_hash: &str) -> Self {
        ResultRecord {
            instance_id: instance.id.clone(),
            n: instance.n(),
            solver,
            status: Status::Ok,
            error_code: None,
            error: None,
            gamma: None,
            p_avg: None,
            p_infinity: None,
            step_count: None,
            rtol: None,
            atol: None,
            t99: None,
            bracket: None,
            probe_log: None,
            n_calls: None,
            best_unsatisfied: None,
            node_count: None,
            best_assignment: None,
            seed: None,
            satisfiable: None,
            config_hash: config_hash.to_string(),
            dataset_hash: dataset_hash.to_string(),
            code_version: CODE_VERSION.to_string(),
        }
    }

    fn fail(mut self, code: &str, message: String) -> Self {
        self.status = Status::Error;
        self.error_code = Some(code.to_string());
        self.error = Some(message);
        self
    }
}

fn dynamics_code(e: &DynamicsError) -> &'static str {
    match e {
        DynamicsError::NormDriftExceeded { .. } => "norm_drift",
        DynamicsError::StepLimitExceeded { .. } => "step_limit",
        DynamicsError::WallClockExceeded { .. } => "wall_clock",
        DynamicsError::StepSizeUnderflow { .. } => "step_underflow",
        DynamicsError::BudgetExceeded { .. } => "size_budget",
        DynamicsError::InvalidParameter(_) => "invalid_parameter",
    }
}

pub fn results_path(cfg: &RunConfig, solver: Solver) -> PathBuf {
    cfg.results_dir().join(format!("{}.jsonl", solver.name()))
}

/// `M2S_WORKERS` if set and valid, otherwise the configured count
/// (`0` = one per available core).
pub fn worker_count(cfg: &RunConfig) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(cfg.workers)
}

/// Reads a results file. A trailing line that does not parse (an
/// interrupted write) is dropped; any other bad line is a data error.
pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>, PipelineError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => {}
            Err(e) => {
                return Err(PipelineError::Data(format!("{}: line {}: {e}", path.display(), i + 1)));
            }
        }
    }
    Ok(out)
}

fn render(records: &[ResultRecord]) -> Result<String, PipelineError> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).map_err(|e| PipelineError::Data(e.to_string()))?);
        s.push('\n');
    }
    Ok(s)
}

fn tables_gamma(instances: &[Instance]) -> Result<f64, PipelineError> {
    let tables: Vec<EnergyTable> = instances
        .par_iter()
        .map(build_energy_table)
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    heuristic_gamma(&tables).map_err(|e| PipelineError::Data(e.to_string()))
}

/// Hopping rate per `n`: the configured value, or the heuristic over the
/// dataset (or over every generated attempt, per `gamma_pool`).
pub fn hopping_rates(cfg: &RunConfig, instances: &[Instance]) -> Result<BTreeMap<usize, f64>, PipelineError> {
    let mut by_n: BTreeMap<usize, Vec<Instance>> = BTreeMap::new();
    for inst in instances {
        by_n.entry(inst.n()).or_default().push(inst.clone());
    }
    let mut out = BTreeMap::new();
    for (n, group) in by_n {
        let gamma = match cfg.gamma {
            Some(g) => g,
            None if cfg.gamma_pool == GammaPool::All && (cfg.n_min..=cfg.n_max).contains(&n) => {
                let m = cfg.clause_factor * n;
                let raw = (0..cfg.target_count as u64)
                    .into_par_iter()
                    .map(|a| generated_instance(n, m, cfg.master_seed, a))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| PipelineError::Data(e.to_string()))?;
                tables_gamma(&raw)?
            }
            None => tables_gamma(&group)?,
        };
        out.insert(n, gamma);
    }
    Ok(out)
}

fn solve_one(cfg: &RunConfig, solver: Solver, inst: &Instance, gamma: f64, blank: ResultRecord) -> ResultRecord {
    let mut rec = blank;
    if solver == Solver::Twosat {
        rec.satisfiable = Some(two_sat_satisfiable(inst));
        return rec;
    }
    if solver == Solver::Classical {
        let bnb = cfg.bnb_config();
        let out = mixbandb_solve(inst, &bnb);
        rec.n_calls = Some(out.n_calls);
        rec.best_unsatisfied = Some(out.best_unsatisfied);
        rec.node_count = Some(out.node_count);
        rec.best_assignment = Some(out.best_assignment.to_string());
        rec.seed = Some(bnb.seed);
        rec.satisfiable = Some(out.best_unsatisfied == 0);
        return rec;
    }
    let table = match build_energy_table(inst) {
        Ok(t) => t,
        Err(e) => return rec.fail("size_budget", e.to_string()),
    };
    let evolve = cfg.evolve_options();
    rec.rtol = Some(cfg.rtol);
    rec.atol = Some(cfg.atol);
    if solver == Solver::Qw {
        rec.gamma = Some(gamma);
        let walk = WalkConfig {
            gamma,
            window: cfg.window(),
        };
        match qw_average_probability(inst, &table, &walk, &evolve) {
            Ok(qw) => {
                rec.p_avg = Some(qw.p_avg);
                rec.step_count = Some(qw.step_count);
            }
            Err(e) => return rec.fail(dynamics_code(&e), e.to_string()),
        }
        if inst.n() <= cfg.pinf_max_n {
            match qw_infinite_time_average(&table, gamma) {
                Ok(p) => rec.p_infinity = Some(p),
                Err(e) => return rec.fail(dynamics_code(&e), e.to_string()),
            }
        }
        return rec;
    }
    match find_t99(inst, &table, &cfg.t99_options(), &evolve) {
        Ok(aqc) => {
            rec.status = if aqc.t99.is_some() { Status::Ok } else { Status::NotFound };
            rec.t99 = aqc.t99;
            rec.bracket = aqc.bracket;
            rec.probe_log = Some(aqc.probe_log);
            rec
        }
        Err(e) => rec.fail(dynamics_code(&e), e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub total: usize,
    pub reused: usize,
    pub computed: usize,
    pub errors: usize,
    pub not_found: usize,
    pub path: PathBuf,
}

/// Runs one solver over the dataset. Records already present with matching
/// hashes are kept; `force` discards mismatching ones instead of failing.
/// `progress(done, todo)` is called after each new record is written.
pub fn run(
    cfg: &RunConfig,
    solver: Solver,
    force: bool,
    mut progress: impl FnMut(usize, usize) + Send,
) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let dataset = load_dataset(&cfg.dataset_dir())?;
    let instances = dataset.instances()?;
    let config_hash = cfg.hash();
    let path = results_path(cfg, solver);

    let mut existing = read_results(&path)?;
    let stale = existing.iter().find(|r| {
        r.config_hash != config_hash
            || r.dataset_hash != dataset.hash
            || r.code_version != CODE_VERSION
            || r.solver != solver
    });
    if let Some(r) = stale {
        if !force {
            return Err(PipelineError::Data(format!(
                "{} holds results from another configuration, dataset or version (first: {}); use --force to discard",
                path.display(),
                r.instance_id
            )));
        }
        existing.clear();
    }
    let wanted: BTreeSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    let mut seen = BTreeSet::new();
    existing.retain(|r| wanted.contains(r.instance_id.as_str()) && seen.insert(r.instance_id.clone()));
    existing.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    // Start from a clean, fully parsable file so appends never follow a torn line.
    write_atomic(&path, render(&existing)?.as_bytes())?;

    let todo: Vec<&Instance> = instances.iter().filter(|i| !seen.contains(&i.id)).collect();
    let gammas = if solver == Solver::Qw && !todo.is_empty() {
        hopping_rates(cfg, &instances)?
    } else {
        BTreeMap::new()
    };

    let workers = worker_count(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut file = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
    let (tx, rx) = mpsc::channel::<ResultRecord>();
    let total_todo = todo.len();
    let new_records = std::thread::scope(|scope| {
        let writer = scope.spawn(|| -> Result<Vec<ResultRecord>, PipelineError> {
            let mut got = Vec::with_capacity(total_todo);
            for rec in rx {
                let line = serde_json::to_string(&rec).map_err(|e| PipelineError::Data(e.to_string()))?;
                writeln!(file, "{line}").and_then(|_| file.flush()).map_err(io_err(&path))?;
                got.push(rec);
                progress(got.len(), total_todo);
            }
            Ok(got)
        });
        pool.install(|| {
            todo.par_iter().for_each_with(tx, |tx, inst| {
                let gamma = gammas.get(&inst.n()).copied().unwrap_or(f64::NAN);
                let blank = ResultRecord::blank(inst, solver, &config_hash, &dataset.hash);
                let _ = tx.send(solve_one(cfg, solver, inst, gamma, blank));
            });
        });
        writer.join().expect("writer thread panicked")
    })?;

    let computed = new_records.len();
    let mut all = existing;
    let reused = all.len();
    all.extend(new_records);
    all.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    write_atomic(&path, render(&all)?.as_bytes())?;
    Ok(RunSummary {
        total: all.len(),
        reused,
        computed,
        errors: all.iter().filter(|r| r.status == Status::Error).count(),
        not_found: all.iter().filter(|r| r.status == Status::NotFound).count(),
        path,
    })
}
