use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use m2s_core::pipeline::{self, PipelineError, RunConfig, Solver};

#[derive(Parser)]
#[command(name = "m2s-bench", version, about = "MAX 2-SAT hardness benchmarks: generate, run, analyze, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (same as --set output_dir=DIR)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 = all cores (M2S_WORKERS takes precedence)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Qw,
    Aqc,
    Classical,
    Twosat,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Qw => Solver::Qw,
            SolverArg::Aqc => Solver::Aqc,
            SolverArg::Classical => Solver::Classical,
            SolverArg::Twosat => Solver::Twosat,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the dataset and manifest
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Run one solver over the dataset, resuming any partial results file
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        solver: SolverArg,
        /// Discard results computed under another configuration or dataset
        #[arg(long)]
        force: bool,
    },
    /// Write the figure tables and summary from the results files
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Accept results with mismatching hashes
        #[arg(long)]
        force: bool,
    },
    /// Check every dataset instance against exhaustive search
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Dataset directory (default: <output_dir>/dataset)
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Add external instance files to the dataset
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: PathBuf,
    },
    /// Print the effective configuration
    Config {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
                path: path.clone(),
                source,
            })?;
            RunConfig::from_text(&text)?
        }
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Gen { common } => {
            let cfg = load_config(&common)?;
            for s in pipeline::gen(&cfg)? {
                println!("n={} kept {}/{}", s.n, s.kept, s.attempted);
            }
            let ds = pipeline::load_dataset(&cfg.dataset_dir())?;
            println!("dataset {} ({} instances)", ds.hash, ds.entries.len());
        }
        Command::Run { common, solver, force } => {
            let cfg = load_config(&common)?;
            let solver = Solver::from(solver);
            let mut last_pct = 0;
            let s = pipeline::run(&cfg, solver, force, |done, todo| {
                let pct = done * 100 / todo.max(1);
                if pct >= last_pct + 5 || done == todo {
                    last_pct = pct;
                    eprintln!("{}: {done}/{todo}", solver.name());
                }
            })?;
            println!(
                "{}: {} records ({} reused, {} computed, {} not found, {} errors) -> {}",
                solver.name(),
                s.total,
                s.reused,
                s.computed,
                s.not_found,
                s.errors,
                s.path.display()
            );
        }
        Command::Analyze { common, force } => {
            let cfg = load_config(&common)?;
            let s = pipeline::analyze(&cfg, force)?;
            if !s.dropped.is_empty() {
                eprintln!("left out {} instance(s) with missing or failed measures", s.dropped.len());
            }
            for f in &s.files {
                println!("{}", f.display());
            }
        }
        Command::Oracle { common, dataset } => {
            let cfg = load_config(&common)?;
            let dir = dataset.unwrap_or_else(|| cfg.dataset_dir());
            let report = pipeline::oracle(&cfg, &dir)?;
            for (n, (count, mean)) in &report.timing {
                println!("n={n} instances={count} mean_seconds={mean:.3e}");
            }
            for m in &report.mismatches {
                eprintln!("mismatch {m}");
            }
            let report = report.into_result()?;
            println!("oracle: {} instances, all checks passed", report.checked);
        }
        Command::Ingest { common, from } => {
            let cfg = load_config(&common)?;
            let s = pipeline::ingest(&cfg, &from)?;
            for (file, why) in &s.rejected {
                eprintln!("skipped {file}: {why}");
            }
            println!(
                "ingested {} instance(s), {} already present, {} rejected",
                s.added.len(),
                s.skipped_existing.len(),
                s.rejected.len()
            );
        }
        Command::Config { common } => {
            let cfg = load_config(&common)?;
            print!("{}", cfg.to_text());
            println!("# config_hash={}", cfg.hash());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
