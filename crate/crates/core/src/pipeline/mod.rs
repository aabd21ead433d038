//! Batch commands over on-disk datasets: generation, ingestion, solver runs
//! with resumable JSON-lines output, analysis and the exhaustive oracle.
//!
//! Layout under the output directory:
//!
//! ```text
//! dataset/manifest.tsv        id <TAB> path relative to dataset/
//! dataset/summary.tsv         n, attempted, kept
//! dataset/n{n}/<id>.cnf       generated instances
//! dataset/ext/<id>.cnf        ingested instances
//! results/{qw,aqc,classical,twosat}.jsonl
//! analysis/*.csv, analysis/summary.txt
//! ```

mod analyze;
mod config;
mod dataset;
mod oracle;
mod results;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use analyze::{analyze, load_difficulty_records, AnalyzeSummary};
pub use config::{GammaPool, RunConfig};
pub use dataset::{
    dataset_hash, gen, ingest, load_dataset, DatasetEntry, GenSummary, IngestSummary, LoadedDataset, MANIFEST,
};
pub use oracle::{oracle, OracleReport};
pub use results::{
    hopping_rates, read_results, results_path, run, worker_count, ResultRecord, RunSummary, Solver, Status, WORKERS_ENV,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("data: {0}")]
    Data(String),
    #[error("oracle found {count} mismatch(es); first: {first}")]
    OracleMismatch { count: usize, first: String },
}

impl PipelineError {
    /// Process exit status: 1 usage, 2 data, 3 oracle mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Io { .. } | PipelineError::Data(_) => 2,
            PipelineError::OracleMismatch { .. } => 3,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}
