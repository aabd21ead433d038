use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{io_err, write_atomic, PipelineError, RunConfig};
use crate::instance::{
    canonicalize_to_zero, generate_dataset, optimum_summary, parse_instance, serialize_instance, Assignment,
    Instance, BRUTE_FORCE_MAX_N,
};

pub const MANIFEST: &str = "manifest.tsv";
const SUMMARY: &str = "summary.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSummary {
    pub n: usize,
    pub attempted: usize,
    pub kept: usize,
}

/// Generates every `n` in the configured range and writes instance files,
/// the manifest and the per-n counts. Replaces any previous manifest.
pub fn gen(cfg: &RunConfig) -> Result<Vec<GenSummary>, PipelineError> {
    cfg.validate()?;
    let dir = cfg.dataset_dir();
    let mut manifest = String::new();
    let mut summary = String::from("n\tattempted\tkept\n");
    let mut out = Vec::new();
    for n in cfg.n_min..=cfg.n_max {
        if cfg.clause_factor * n > 2 * n * (n - 1) {
            return Err(PipelineError::Config(format!(
                "clause_factor {} is infeasible at n = {n}",
                cfg.clause_factor
            )));
        }
        let ds = generate_dataset(n, cfg.target_count, cfg.clause_factor, cfg.master_seed)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let sub = format!("n{n}");
        for inst in &ds.instances {
            let rel = format!("{sub}/{}.cnf", inst.id);
            write_atomic(&dir.join(&rel), serialize_instance(inst).as_bytes())?;
            let _ = writeln!(manifest, "{}\t{rel}", inst.id);
        }
        let _ = writeln!(summary, "{n}\t{}\t{}", ds.attempted, ds.kept());
        out.push(GenSummary {
            n,
            attempted: ds.attempted,
            kept: ds.kept(),
        });
    }
    write_atomic(&dir.join(SUMMARY), summary.as_bytes())?;
    write_atomic(&dir.join(MANIFEST), manifest.as_bytes())?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub id: String,
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    /// Parse failures are kept so the oracle can name them.
    pub instance: Result<Instance, String>,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dir: PathBuf,
    pub entries: Vec<DatasetEntry>,
    pub hash: String,
}

impl LoadedDataset {
    /// All instances, failing on the first unparsable or mislabeled file.
    pub fn instances(&self) -> Result<Vec<Instance>, PipelineError> {
        self.entries
            .iter()
            .map(|e| match &e.instance {
                Ok(inst) => Ok(inst.clone()),
                Err(msg) => Err(PipelineError::Data(format!("{}: {msg}", e.id))),
            })
            .collect()
    }
}

/// SHA-256 over `id \n file bytes` in manifest order.
pub fn dataset_hash(entries: &[DatasetEntry]) -> String {
    let mut h = Sha256::new();
    for e in entries {
        h.update(e.id.as_bytes());
        h.update(b"\n");
        h.update(&e.bytes);
    }
    hex::encode(h.finalize())
}

fn read_manifest(dir: &Path) -> Result<Vec<(String, String)>, PipelineError> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, rel) = line
            .split_once('\t')
            .ok_or_else(|| PipelineError::Data(format!("{}:{}: expected id<TAB>path", path.display(), i + 1)))?;
        if !seen.insert(id.to_string()) {
            return Err(PipelineError::Data(format!("duplicate id {id} in manifest")));
        }
        rows.push((id.to_string(), rel.to_string()));
    }
    Ok(rows)
}

pub fn load_dataset(dir: &Path) -> Result<LoadedDataset, PipelineError> {
    let entries = read_manifest(dir)?
        .into_iter()
        .map(|(id, rel)| {
            let path = dir.join(&rel);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            let instance = std::str::from_utf8(&bytes)
                .map_err(|e| e.to_string())
                .and_then(|text| parse_instance(text).map_err(|e| e.to_string()))
                .and_then(|inst| {
                    if inst.id == id {
                        Ok(inst)
                    } else {
                        Err(format!("file declares id {:?}", inst.id))
                    }
                });
            Ok(DatasetEntry {
                id,
                path,
                bytes,
                instance,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let hash = dataset_hash(&entries);
    Ok(LoadedDataset {
        dir: dir.to_path_buf(),
        entries,
        hash,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub added: Vec<String>,
    pub skipped_existing: Vec<String>,
    /// `(file, reason)` for files left out.
    pub rejected: Vec<(String, String)>,
}

/// Copies external instance files into the dataset. Files without an `id`
/// comment get `ext-<file stem>`. Only instances with a unique optimum are
/// kept, canonicalized so the optimum is all-zeros.
pub fn ingest(cfg: &RunConfig, from: &Path) -> Result<IngestSummary, PipelineError> {
    let dir = cfg.dataset_dir();
    let mut known: BTreeSet<String> = match read_manifest(&dir) {
        Ok(rows) => rows.into_iter().map(|(id, _)| id).collect(),
        Err(PipelineError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => BTreeSet::new(),
        Err(e) => return Err(e),
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(from)
        .map_err(io_err(from))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(from)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let mut summary = IngestSummary::default();
    let mut appended = String::new();
    for path in files {
        let name = path.display().to_string();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                summary.rejected.push((name, e.to_string()));
                continue;
            }
        };
        let mut inst = match parse_instance(&text) {
            Ok(i) => i,
            Err(e) => {
                summary.rejected.push((name, e.to_string()));
                continue;
            }
        };
        if inst.id.is_empty() {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            inst.id = format!("ext-{stem}");
        }
        if inst.id.contains(['\t', '\n', '/', '\\']) {
            summary.rejected.push((name, format!("unusable id {:?}", inst.id)));
            continue;
        }
        if known.contains(&inst.id) {
            summary.skipped_existing.push(inst.id);
            continue;
        }
        if inst.n() > BRUTE_FORCE_MAX_N {
            summary.rejected.push((name, format!("n = {} exceeds {BRUTE_FORCE_MAX_N}", inst.n())));
            continue;
        }
        let opt = optimum_summary(&inst).map_err(|e| PipelineError::Data(e.to_string()))?;
        if opt.count != 1 {
            summary.rejected.push((name, format!("{} optimal assignments", opt.count)));
            continue;
        }
        let canon = canonicalize_to_zero(&inst, &Assignment::from_index(inst.n(), opt.first_index))
            .map_err(|e| PipelineError::Data(e.to_string()))?;
        let rel = format!("ext/{}.cnf", canon.id);
        write_atomic(&dir.join(&rel), serialize_instance(&canon).as_bytes())?;
        let _ = writeln!(appended, "{}\t{rel}", canon.id);
        known.insert(canon.id.clone());
        summary.added.push(canon.id);
    }
    if !appended.is_empty() {
        let path = dir.join(MANIFEST);
        let mut manifest = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io_err(&path)(e)),
        };
        if !manifest.is_empty() && !manifest.ends_with('\n') {
            manifest.push('\n');
        }
        manifest.push_str(&appended);
        write_atomic(&path, manifest.as_bytes())?;
    }
    Ok(summary)
}
