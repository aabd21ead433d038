//! Two-solver portfolios: both solvers run side by side on half the
//! resources each, so an instance costs twice the cheaper of the two.

use serde::{Deserialize, Serialize};

use super::{by_n, lower_median, AnalyticsError, DifficultyRecord, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalizer {
    /// Native units: `1/p_avg`, `t99`, `n_calls`.
    Raw,
    /// Native cost divided by the median native cost of that measure among
    /// instances with the same `n`.
    #[default]
    MedianAtN,
}

impl Normalizer {
    pub fn name(self) -> &'static str {
        match self {
            Normalizer::Raw => "raw",
            Normalizer::MedianAtN => "median-at-n",
        }
    }
}

/// Native cost of one instance under one solver; not-found durations cost `+∞`.
pub fn native_cost(r: &DifficultyRecord, measure: Measure) -> Result<f64, AnalyticsError> {
    let v = r.value(measure).ok_or_else(|| AnalyticsError::MissingMeasure {
        id: r.instance_id.clone(),
        measure,
    })?;
    Ok(match measure {
        Measure::Qw => 1.0 / v,
        _ => v,
    })
}

/// `2 · min(a_i, b_i)` per instance.
pub fn portfolio_costs(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 2.0 * x.min(*y)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    pub instance_id: String,
    pub n: usize,
    pub cost_a: f64,
    pub cost_b: f64,
    pub portfolio: f64,
    /// Standalone cost over portfolio cost.
    pub speedup_a: f64,
    pub speedup_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub total: f64,
    pub median: f64,
    pub max: f64,
}

impl CostStats {
    fn of(costs: &[f64]) -> Self {
        CostStats {
            total: costs.iter().sum(),
            median: lower_median(costs).unwrap_or(f64::NAN),
            max: costs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSummary {
    pub a: Measure,
    pub b: Measure,
    pub normalizer: Normalizer,
    pub entries: Vec<PortfolioEntry>,
    pub standalone_a: CostStats,
    pub standalone_b: CostStats,
    pub portfolio: CostStats,
    pub median_speedup_a: f64,
    pub median_speedup_b: f64,
}

/// Evaluates the portfolio of solvers `a` and `b` over the records, which
/// may span several `n`. Entries keep the input order.
pub fn portfolio_eval(
    records: &[DifficultyRecord],
    a: Measure,
    b: Measure,
    normalizer: Normalizer,
) -> Result<PortfolioSummary, AnalyticsError> {
    let scale = |m: Measure| -> Result<std::collections::BTreeMap<usize, f64>, AnalyticsError> {
        let mut out = std::collections::BTreeMap::new();
        for (n, group) in by_n(records) {
            let s = match normalizer {
                Normalizer::Raw => 1.0,
                Normalizer::MedianAtN => {
                    let costs = group.iter().map(|r| native_cost(r, m)).collect::<Result<Vec<_>, _>>()?;
                    lower_median(&costs).unwrap_or(1.0)
                }
            };
            out.insert(n, s);
        }
        Ok(out)
    };
    let (scale_a, scale_b) = (scale(a)?, scale(b)?);
    let mut entries = Vec::with_capacity(records.len());
    for r in records {
        let cost_a = native_cost(r, a)? / scale_a[&r.n];
        let cost_b = native_cost(r, b)? / scale_b[&r.n];
        let portfolio = 2.0 * cost_a.min(cost_b);
        entries.push(PortfolioEntry {
            instance_id: r.instance_id.clone(),
            n: r.n,
            cost_a,
            cost_b,
            portfolio,
            speedup_a: cost_a / portfolio,
            speedup_b: cost_b / portfolio,
        });
    }
    let col = |f: fn(&PortfolioEntry) -> f64| entries.iter().map(f).collect::<Vec<f64>>();
    Ok(PortfolioSummary {
        a,
        b,
        normalizer,
        standalone_a: CostStats::of(&col(|e| e.cost_a)),
        standalone_b: CostStats::of(&col(|e| e.cost_b)),
        portfolio: CostStats::of(&col(|e| e.portfolio)),
        median_speedup_a: lower_median(&col(|e| e.speedup_a)).unwrap_or(f64::NAN),
        median_speedup_b: lower_median(&col(|e| e.speedup_b)).unwrap_or(f64::NAN),
        entries,
    })
}
