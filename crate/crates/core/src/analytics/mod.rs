//! Difficulty statistics over per-instance results: rankings, deciles and
//! percentile boundaries, cross-measure medians, satisfiability splits,
//! scaling fits and solver portfolios.

mod portfolio;
pub mod report;
mod scaling;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use portfolio::{portfolio_costs, portfolio_eval, Normalizer, PortfolioEntry, PortfolioSummary};
pub use scaling::{scaling_fit, AxisMode, ScalingFit};
pub use stats::{average_ranks, bin_edges, histogram, lower_median, pearson, spearman, BinSpec, Histogram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("instance {id} has no {measure} value")]
    MissingMeasure { id: String, measure: Measure },
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("records mix n = {0} and n = {1}")]
    MixedN(usize, usize),
    #[error("scaling fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("scaling fit needs positive finite values, got {0}")]
    NonPositiveValue(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Qw,
    Aqc,
    Classical,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Qw, Measure::Aqc, Measure::Classical];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Qw => "qw",
            Measure::Aqc => "aqc",
            Measure::Classical => "classical",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of the anneal-duration search for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum T99 {
    Found(f64),
    NotFound,
}

impl T99 {
    /// The duration, with not-found mapped to `+∞`.
    pub fn value(self) -> f64 {
        match self {
            T99::Found(t) => t,
            T99::NotFound => f64::INFINITY,
        }
    }
}

/// Joint difficulty data for one instance. Absent fields mean the solver was
/// not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRecord {
    pub instance_id: String,
    pub n: usize,
    pub p_avg: Option<f64>,
    pub t99: Option<T99>,
    pub n_calls: Option<u64>,
    pub satisfiable: Option<bool>,
    pub p_infinity: Option<f64>,
}

impl DifficultyRecord {
    pub fn new(instance_id: impl Into<String>, n: usize) -> Self {
        DifficultyRecord {
            instance_id: instance_id.into(),
            n,
            p_avg: None,
            t99: None,
            n_calls: None,
            satisfiable: None,
            p_infinity: None,
        }
    }

    /// Natural value of a measure: `p_avg`, `t99` (`+∞` if not found) or `n_calls`.
    pub fn value(&self, measure: Measure) -> Option<f64> {
        match measure {
            Measure::Qw => self.p_avg,
            Measure::Aqc => self.t99.map(T99::value),
            Measure::Classical => self.n_calls.map(|c| c as f64),
        }
    }

    /// A key that grows with difficulty.
    pub fn hardness(&self, measure: Measure) -> Result<f64, AnalyticsError> {
        let v = self.value(measure).ok_or_else(|| AnalyticsError::MissingMeasure {
            id: self.instance_id.clone(),
            measure,
        })?;
        Ok(if measure == Measure::Qw { -v } else { v })
    }
}

/// Values of a measure over records, failing on the first missing one.
pub fn values(records: &[DifficultyRecord], measure: Measure) -> Result<Vec<f64>, AnalyticsError> {
    records
        .iter()
        .map(|r| {
            r.value(measure).ok_or_else(|| AnalyticsError::MissingMeasure {
                id: r.instance_id.clone(),
                measure,
            })
        })
        .collect()
}

/// Spearman correlation between two measures over the same records.
pub fn measure_correlation(records: &[DifficultyRecord], x: Measure, y: Measure) -> Result<f64, AnalyticsError> {
    spearman(&values(records, x)?, &values(records, y)?)
}

fn common_n(records: &[DifficultyRecord]) -> Result<usize, AnalyticsError> {
    let n = records.first().map_or(0, |r| r.n);
    match records.iter().find(|r| r.n != n) {
        Some(r) => Err(AnalyticsError::MixedN(n, r.n)),
        None => Ok(n),
    }
}

/// Instance ids from least to most difficult; ties go to the smaller id.
pub fn rank_by_difficulty(records: &[DifficultyRecord], measure: Measure) -> Result<Vec<String>, AnalyticsError> {
    common_n(records)?;
    let mut keyed = records
        .iter()
        .map(|r| Ok((r.hardness(measure)?, r.instance_id.as_str())))
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(keyed.into_iter().map(|(_, id)| id.to_string()).collect())
}

pub const BOUNDARY_PERCENTILES: [u8; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 99];

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecilePartition {
    pub measure: Measure,
    pub n: usize,
    /// Ids from least to most difficult.
    pub order: Vec<String>,
    pub decile_of: BTreeMap<String, u8>,
    pub top1pct: BTreeSet<String>,
    pub boundary_ids: BTreeMap<u8, String>,
}

impl DecilePartition {
    pub fn members(&self, decile: u8) -> Vec<&str> {
        self.order
            .iter()
            .filter(|id| self.decile_of[*id] == decile)
            .map(String::as_str)
            .collect()
    }
}

/// Splits records into difficulty deciles. With `N` records, decile `k`
/// holds ranks in `(⌈(k−1)N/10⌉, ⌈kN/10⌉]`, the percentile-`p` boundary
/// instance has rank `⌈pN/100⌉`, and the top 1% are ranks above `⌈99N/100⌉`.
pub fn partition_deciles(records: &[DifficultyRecord], measure: Measure) -> Result<DecilePartition, AnalyticsError> {
    let total = records.len();
    if total < 100 {
        return Err(AnalyticsError::TooFewRecords { need: 100, got: total });
    }
    let n = common_n(records)?;
    let order = rank_by_difficulty(records, measure)?;
    let mut decile_of = BTreeMap::new();
    let mut k = 1u8;
    for (i, id) in order.iter().enumerate() {
        let rank = i + 1;
        while rank > ceil_div(k as usize * total, 10) {
            k += 1;
        }
        decile_of.insert(id.clone(), k);
    }
    let boundary_ids = BOUNDARY_PERCENTILES
        .iter()
        .map(|&p| (p, order[ceil_div(p as usize * total, 100) - 1].clone()))
        .collect();
    let cut = ceil_div(99 * total, 100);
    let top1pct = order[cut..].iter().cloned().collect();
    Ok(DecilePartition {
        measure,
        n,
        order,
        decile_of,
        top1pct,
        boundary_ids,
    })
}

/// Group label in cross-measure tables: deciles 1 to 10, then the top 1%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Decile(u8),
    Top1Pct,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Decile(d) => write!(f, "decile{d}"),
            Group::Top1Pct => f.write_str("top1pct"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMedian {
    pub group: Group,
    pub n: usize,
    pub median: f64,
    pub size: usize,
}

/// For each n and each decile (and the top 1%) under `group_measure`, the
/// lower median of `report_measure`.
pub fn cross_decile_medians(
    records_by_n: &BTreeMap<usize, Vec<DifficultyRecord>>,
    group_measure: Measure,
    report_measure: Measure,
) -> Result<Vec<CrossMedian>, AnalyticsError> {
    let mut out = Vec::new();
    for (&n, records) in records_by_n {
        let part = partition_deciles(records, group_measure)?;
        let by_id: BTreeMap<&str, &DifficultyRecord> = records.iter().map(|r| (r.instance_id.as_str(), r)).collect();
        let report = |ids: &mut dyn Iterator<Item = &str>| -> Result<(f64, usize), AnalyticsError> {
            let vals: Vec<f64> = ids.map(|id| by_id[id]).map(|r| values(std::slice::from_ref(r), report_measure).map(|v| v[0])).collect::<Result<_, _>>()?;
            Ok((lower_median(&vals).unwrap_or(f64::NAN), vals.len()))
        };
        for d in 1..=10u8 {
            let (median, size) = report(&mut part.members(d).into_iter())?;
            out.push(CrossMedian {
                group: Group::Decile(d),
                n,
                median,
                size,
            });
        }
        let (median, size) = report(&mut part.top1pct.iter().map(String::as_str))?;
        out.push(CrossMedian {
            group: Group::Top1Pct,
            n,
            median,
            size,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SatQuantity {
    PAvg,
    T99,
    Log10T99,
    NCalls,
    Log10NCalls,
}

impl SatQuantity {
    pub const ALL: [SatQuantity; 5] = [
        SatQuantity::PAvg,
        SatQuantity::T99,
        SatQuantity::Log10T99,
        SatQuantity::NCalls,
        SatQuantity::Log10NCalls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SatQuantity::PAvg => "p_avg",
            SatQuantity::T99 => "t99",
            SatQuantity::Log10T99 => "log10_t99",
            SatQuantity::NCalls => "n_calls",
            SatQuantity::Log10NCalls => "log10_n_calls",
        }
    }

    fn of(self, r: &DifficultyRecord) -> Option<f64> {
        match self {
            SatQuantity::PAvg => r.p_avg,
            SatQuantity::T99 => r.value(Measure::Aqc),
            SatQuantity::Log10T99 => r.value(Measure::Aqc).map(f64::log10),
            SatQuantity::NCalls => r.value(Measure::Classical),
            SatQuantity::Log10NCalls => r.value(Measure::Classical).map(f64::log10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatGroup {
    pub count: usize,
    /// Lower medians; not-found durations count as `+∞`.
    pub medians: BTreeMap<SatQuantity, f64>,
    /// Densities over finite values only, on edges shared by both groups.
    pub histograms: BTreeMap<SatQuantity, Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatSplit {
    pub n: usize,
    pub sat: SatGroup,
    pub unsat: SatGroup,
    pub empty_groups: Vec<String>,
}

/// Splits records by satisfiability and summarizes every available quantity.
/// Records without a satisfiability flag are skipped.
pub fn split_by_satisfiability(records: &[DifficultyRecord], bins: BinSpec) -> Result<SatSplit, AnalyticsError> {
    let n = common_n(records)?;
    let (sat, unsat): (Vec<&DifficultyRecord>, Vec<&DifficultyRecord>) =
        records.iter().filter(|r| r.satisfiable.is_some()).partition(|r| r.satisfiable == Some(true));
    let mut groups = [SatGroup::empty(sat.len()), SatGroup::empty(unsat.len())];
    for q in SatQuantity::ALL {
        let sides: [Vec<f64>; 2] = [&sat, &unsat].map(|g| g.iter().filter_map(|r| q.of(r)).collect());
        if sides.iter().all(Vec::is_empty) {
            continue;
        }
        let all: Vec<f64> = sides.iter().flatten().copied().collect();
        let edges = bin_edges(&all, bins);
        for (group, vals) in groups.iter_mut().zip(&sides) {
            if let Some(m) = lower_median(vals) {
                group.medians.insert(q, m);
            }
            group.histograms.insert(q, histogram(vals, &edges));
        }
    }
    let mut empty_groups = Vec::new();
    if sat.is_empty() {
        empty_groups.push("sat".to_string());
    }
    if unsat.is_empty() {
        empty_groups.push("unsat".to_string());
    }
    let [sat, unsat] = groups;
    Ok(SatSplit {
        n,
        sat,
        unsat,
        empty_groups,
    })
}

impl SatGroup {
    fn empty(count: usize) -> Self {
        SatGroup {
            count,
            medians: BTreeMap::new(),
            histograms: BTreeMap::new(),
        }
    }
}

/// Groups records by variable count.
pub fn by_n(records: &[DifficultyRecord]) -> BTreeMap<usize, Vec<DifficultyRecord>> {
    let mut out: BTreeMap<usize, Vec<DifficultyRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.n).or_default().push(r.clone());
    }
    out
}
