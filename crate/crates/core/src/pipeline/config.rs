//! Line-oriented `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::analytics::report::ReportOptions;
use crate::analytics::{BinSpec, Normalizer};
use crate::classical::{BnbConfig, MixingConfig};
use crate::dynamics::{EvolveOptions, StepLimits, T99Options, TimeWindow, Tolerance};

/// Which generated instances enter the hopping-rate average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaPool {
    Kept,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub target_count: usize,
    pub clause_factor: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub qw_t_start: f64,
    pub qw_width: f64,
    /// Fixed hopping rate; `None` uses the per-n heuristic.
    pub gamma: Option<f64>,
    pub gamma_pool: GammaPool,
    /// Infinite-time averages are computed for `n` up to this.
    pub pinf_max_n: usize,
    pub t99_init: f64,
    pub t99_max_doublings: u32,
    /// Per-instance cap; `0` disables it.
    pub t99_wall_clock_secs: f64,
    /// Relaxation dimension; `0` picks it from `n`.
    pub mixing_k: usize,
    pub mixing_max_sweeps: usize,
    pub mixing_tol: f64,
    pub rounds: usize,
    pub classical_seed: u64,
    pub histogram_bins: BinSpec,
    pub normalizer: Normalizer,
    /// `0` lets the thread pool decide.
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 42,
            n_min: 5,
            n_max: 9,
            target_count: 2000,
            clause_factor: 3,
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 50_000_000,
            qw_t_start: 0.0,
            qw_width: 100.0,
            gamma: None,
            gamma_pool: GammaPool::Kept,
            pinf_max_n: 9,
            t99_init: 1.0,
            t99_max_doublings: 20,
            t99_wall_clock_secs: 0.0,
            mixing_k: 0,
            mixing_max_sweeps: 200,
            mixing_tol: 1e-4,
            rounds: 20,
            classical_seed: 0,
            histogram_bins: BinSpec::FreedmanDiaconis,
            normalizer: Normalizer::MedianAtN,
            workers: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("bad value for {key}: {value:?}")))
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        match key {
            "master_seed" => self.master_seed = parse(key, value)?,
            "n_min" => self.n_min = parse(key, value)?,
            "n_max" => self.n_max = parse(key, value)?,
            "target_count" => self.target_count = parse(key, value)?,
            "clause_factor" => self.clause_factor = parse(key, value)?,
            "rtol" => self.rtol = parse(key, value)?,
            "atol" => self.atol = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "qw_t_start" => self.qw_t_start = parse(key, value)?,
            "qw_width" => self.qw_width = parse(key, value)?,
            "gamma" => {
                self.gamma = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "gamma_pool" => {
                self.gamma_pool = match value {
                    "kept" => GammaPool::Kept,
                    "all" => GammaPool::All,
                    _ => return Err(PipelineError::Config(format!("gamma_pool must be kept or all, got {value:?}"))),
                }
            }
            "pinf_max_n" => self.pinf_max_n = parse(key, value)?,
            "t99_init" => self.t99_init = parse(key, value)?,
            "t99_max_doublings" => self.t99_max_doublings = parse(key, value)?,
            "t99_wall_clock_secs" => self.t99_wall_clock_secs = parse(key, value)?,
            "mixing_k" => self.mixing_k = parse(key, value)?,
            "mixing_max_sweeps" => self.mixing_max_sweeps = parse(key, value)?,
            "mixing_tol" => self.mixing_tol = parse(key, value)?,
            "rounds" => self.rounds = parse(key, value)?,
            "classical_seed" => self.classical_seed = parse(key, value)?,
            "histogram_bins" => {
                self.histogram_bins = match value {
                    "fd" => BinSpec::FreedmanDiaconis,
                    v => BinSpec::Count(parse(key, v)?),
                }
            }
            "normalizer" => {
                self.normalizer = match value {
                    "raw" => Normalizer::Raw,
                    "median-at-n" => Normalizer::MedianAtN,
                    _ => return Err(PipelineError::Config(format!("normalizer must be raw or median-at-n, got {value:?}"))),
                }
            }
            "workers" => self.workers = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(PipelineError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::Config(msg.to_string()));
        if self.n_min < 2 || self.n_min > self.n_max || self.n_max > crate::instance::BRUTE_FORCE_MAX_N {
            return bad("need 2 <= n_min <= n_max <= 24");
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.qw_width > 0.0 && self.qw_t_start >= 0.0) {
            return bad("qw window needs width > 0 and t_start >= 0");
        }
        if self.gamma.is_some_and(|g| !(g > 0.0)) {
            return bad("gamma must be positive");
        }
        if !(self.t99_init > 0.0) || self.t99_wall_clock_secs < 0.0 {
            return bad("t99_init must be positive and the wall clock cap non-negative");
        }
        if self.clause_factor == 0 {
            return bad("clause_factor must be positive");
        }
        Ok(())
    }

    /// Canonical text of every key except the ones that cannot change
    /// results (`workers`, `output_dir`).
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "master_seed = {}", self.master_seed);
        let _ = writeln!(w, "n_min = {}", self.n_min);
        let _ = writeln!(w, "n_max = {}", self.n_max);
        let _ = writeln!(w, "target_count = {}", self.target_count);
        let _ = writeln!(w, "clause_factor = {}", self.clause_factor);
        let _ = writeln!(w, "rtol = {:e}", self.rtol);
        let _ = writeln!(w, "atol = {:e}", self.atol);
        let _ = writeln!(w, "max_steps = {}", self.max_steps);
        let _ = writeln!(w, "qw_t_start = {}", self.qw_t_start);
        let _ = writeln!(w, "qw_width = {}", self.qw_width);
        let _ = writeln!(w, "gamma = {}", self.gamma.map_or("auto".to_string(), |g| g.to_string()));
        let _ = writeln!(
            w,
            "gamma_pool = {}",
            if self.gamma_pool == GammaPool::Kept { "kept" } else { "all" }
        );
        let _ = writeln!(w, "pinf_max_n = {}", self.pinf_max_n);
        let _ = writeln!(w, "t99_init = {}", self.t99_init);
        let _ = writeln!(w, "t99_max_doublings = {}", self.t99_max_doublings);
        let _ = writeln!(w, "t99_wall_clock_secs = {}", self.t99_wall_clock_secs);
        let _ = writeln!(w, "mixing_k = {}", self.mixing_k);
        let _ = writeln!(w, "mixing_max_sweeps = {}", self.mixing_max_sweeps);
        let _ = writeln!(w, "mixing_tol = {:e}", self.mixing_tol);
        let _ = writeln!(w, "rounds = {}", self.rounds);
        let _ = writeln!(w, "classical_seed = {}", self.classical_seed);
        let _ = writeln!(
            w,
            "histogram_bins = {}",
            match self.histogram_bins {
                BinSpec::FreedmanDiaconis => "fd".to_string(),
                BinSpec::Count(k) => k.to_string(),
            }
        );
        let _ = writeln!(w, "normalizer = {}", self.normalizer.name());
        s
    }

    /// Full text including the machine-local keys, parseable by [`RunConfig::from_text`].
    pub fn to_text(&self) -> String {
        format!(
            "{}workers = {}\noutput_dir = {}\n",
            self.canonical_text(),
            self.workers,
            self.output_dir.display()
        )
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            tolerance: Tolerance {
                rtol: self.rtol,
                atol: self.atol,
            },
            limits: StepLimits {
                max_steps: self.max_steps,
                deadline: None,
            },
            ..EvolveOptions::default()
        }
    }

    pub fn window(&self) -> TimeWindow {
        TimeWindow {
            t_start: self.qw_t_start,
            width: self.qw_width,
        }
    }

    pub fn t99_options(&self) -> T99Options {
        T99Options {
            t_init: self.t99_init,
            max_doublings: self.t99_max_doublings,
            wall_clock: (self.t99_wall_clock_secs > 0.0).then(|| Duration::from_secs_f64(self.t99_wall_clock_secs)),
            ..T99Options::default()
        }
    }

    pub fn bnb_config(&self) -> BnbConfig {
        BnbConfig {
            mixing: MixingConfig {
                k: (self.mixing_k > 0).then_some(self.mixing_k),
                max_sweeps: self.mixing_max_sweeps,
                tol: self.mixing_tol,
            },
            rounds: self.rounds,
            seed: self.classical_seed,
            audit: false,
        }
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            bins: self.histogram_bins,
            normalizer: self.normalizer,
            ..ReportOptions::default()
        }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.output_dir.join("dataset")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.output_dir.join("results")
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.output_dir.join("analysis")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_hash() {
        let mut cfg = RunConfig::default();
        cfg.set("gamma", "0.75").unwrap();
        cfg.set("histogram_bins", "30").unwrap();
        cfg.set("normalizer", "raw").unwrap();
        let back = RunConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let mut other = cfg.clone();
        other.workers = 8;
        other.output_dir = "/elsewhere".into();
        assert_eq!(other.hash(), cfg.hash());
        other.master_seed += 1;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn comments_and_errors() {
        let cfg = RunConfig::from_text("# desk profile\n\nn_min = 5\nn_max=6\n").unwrap();
        assert_eq!((cfg.n_min, cfg.n_max), (5, 6));
        assert!(RunConfig::from_text("n_min 5").is_err());
        assert!(RunConfig::from_text("bogus = 1").is_err());
        assert!(RunConfig::from_text("n_min = x").is_err());
        assert!(RunConfig::from_text("n_min = 9\nn_max = 5").is_err());
        assert!(RunConfig::from_text("gamma = -1").is_err());
    }
}
