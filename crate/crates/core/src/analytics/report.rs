//! CSV tables for every analysis, rendered as strings so that the same
//! records always give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    bin_edges, by_n, cross_decile_medians, histogram, lower_median, partition_deciles, portfolio_eval, scaling_fit,
    spearman, split_by_satisfiability, AnalyticsError, AxisMode, BinSpec, DifficultyRecord, Group, Measure,
    Normalizer, SatQuantity, ScalingFit, BOUNDARY_PERCENTILES,
};

/// Hashes and version stamped on the first line of every file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub dataset_hash: String,
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    fn header(&self) -> String {
        format!(
            "# dataset_hash={} config_hash={} code_version={} log_base=2\n",
            self.dataset_hash, self.config_hash, self.code_version
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub bins: BinSpec,
    pub heatmap_bins: usize,
    pub normalizer: Normalizer,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            bins: BinSpec::FreedmanDiaconis,
            heatmap_bins: 20,
            normalizer: Normalizer::MedianAtN,
        }
    }
}

/// Number formatting used in every table: shortest round-trip decimal,
/// `inf` for infinities and an empty cell for missing values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_num)
}

struct Table {
    text: String,
}

impl Table {
    fn new(prov: &Provenance, columns: &[&str]) -> Self {
        let mut text = prov.header();
        text.push_str(&columns.join(","));
        text.push('\n');
        Table { text }
    }

    fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let cells: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn complete(records: &[DifficultyRecord], m: Measure) -> bool {
    !records.is_empty() && records.iter().all(|r| r.value(m).is_some())
}

/// Records where both measures are present and finite.
fn finite_pairs(records: &[DifficultyRecord], x: Measure, y: Measure) -> (Vec<f64>, Vec<f64>) {
    records
        .iter()
        .filter_map(|r| match (r.value(x), r.value(y)) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => Some((a, b)),
            _ => None,
        })
        .unzip()
}

/// Spearman correlation over records with finite values of both measures,
/// which leaves out not-found durations.
pub fn pair_correlation(records: &[DifficultyRecord], x: Measure, y: Measure) -> Option<(f64, usize)> {
    let (xs, ys) = finite_pairs(records, x, y);
    spearman(&xs, &ys).ok().map(|rho| (rho, xs.len()))
}

const PAIRS: [(Measure, Measure); 3] = [
    (Measure::Qw, Measure::Aqc),
    (Measure::Qw, Measure::Classical),
    (Measure::Aqc, Measure::Classical),
];

fn fig2(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance, opts: &ReportOptions) -> String {
    let mut t = Table::new(prov, &["n", "x", "y", "rho", "sample", "log10_x_lo", "log10_x_hi", "log10_y_lo", "log10_y_hi", "count"]);
    for (&n, recs) in groups {
        for (x, y) in PAIRS {
            let (xs, ys) = finite_pairs(recs, x, y);
            let Ok(rho) = spearman(&xs, &ys) else { continue };
            let lx: Vec<f64> = xs.iter().map(|v| v.log10()).collect();
            let ly: Vec<f64> = ys.iter().map(|v| v.log10()).collect();
            let ex = bin_edges(&lx, BinSpec::Count(opts.heatmap_bins));
            let ey = bin_edges(&ly, BinSpec::Count(opts.heatmap_bins));
            let mut counts = vec![vec![0u64; ey.len() - 1]; ex.len() - 1];
            let locate = |edges: &[f64], v: f64| edges.partition_point(|&e| e <= v).saturating_sub(1).min(edges.len() - 2);
            for (a, b) in lx.iter().zip(&ly) {
                counts[locate(&ex, *a)][locate(&ey, *b)] += 1;
            }
            for (i, row) in counts.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    t.row(&[
                        n.to_string(),
                        x.to_string(),
                        y.to_string(),
                        fmt_num(rho),
                        xs.len().to_string(),
                        fmt_num(ex[i]),
                        fmt_num(ex[i + 1]),
                        fmt_num(ey[j]),
                        fmt_num(ey[j + 1]),
                        c.to_string(),
                    ]);
                }
            }
        }
    }
    t.text
}

fn fit_cells(fit: &ScalingFit) -> [String; 4] {
    [fmt_num(fit.kappa), fmt_num(fit.stderr), fmt_num(fit.intercept), fit.axis_mode.name().to_string()]
}

/// Log-linear fits of the percentile-boundary values against n, keyed by
/// (measure, percentile). Boundaries with a not-found value are skipped.
pub fn boundary_fits(
    groups: &BTreeMap<usize, Vec<DifficultyRecord>>,
    measure: Measure,
) -> Result<BTreeMap<u8, (Vec<(usize, String, f64)>, Option<ScalingFit>)>, AnalyticsError> {
    let mut out: BTreeMap<u8, (Vec<(usize, String, f64)>, Option<ScalingFit>)> = BTreeMap::new();
    for (&n, recs) in groups {
        if recs.len() < 100 || !complete(recs, measure) {
            continue;
        }
        let part = partition_deciles(recs, measure)?;
        let value: BTreeMap<&str, f64> = recs.iter().map(|r| (r.instance_id.as_str(), r.value(measure).unwrap())).collect();
        for p in BOUNDARY_PERCENTILES {
            let id = &part.boundary_ids[&p];
            out.entry(p).or_default().0.push((n, id.clone(), value[id.as_str()]));
        }
    }
    for (points, fit) in out.values_mut() {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|(_, _, v)| v.is_finite() && *v > 0.0)
            .map(|&(n, _, v)| (n as f64, v))
            .collect();
        *fit = scaling_fit(&pts, AxisMode::LogLinear).ok();
    }
    Ok(out)
}

fn fig3(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance) -> Result<String, AnalyticsError> {
    let mut t = Table::new(
        prov,
        &["row", "measure", "percentile", "n", "instance_id", "value", "kappa", "stderr", "intercept", "axis"],
    );
    for measure in Measure::ALL {
        for (p, (points, fit)) in boundary_fits(groups, measure)? {
            for (n, id, v) in points {
                t.row(&["point".into(), measure.to_string(), p.to_string(), n.to_string(), id, fmt_num(v), String::new(), String::new(), String::new(), String::new()]);
            }
            if let Some(fit) = fit {
                let [k, s, i, a] = fit_cells(&fit);
                t.row(&["fit".into(), measure.to_string(), p.to_string(), String::new(), String::new(), String::new(), k, s, i, a]);
            }
        }
    }
    Ok(t.text)
}

fn fig4(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance) -> Result<String, AnalyticsError> {
    let mut t = Table::new(
        prov,
        &["row", "group_measure", "report_measure", "group", "n", "size", "median", "kappa", "stderr", "intercept", "axis"],
    );
    for g in Measure::ALL {
        for r in Measure::ALL {
            if g == r {
                continue;
            }
            let usable: BTreeMap<usize, Vec<DifficultyRecord>> = groups
                .iter()
                .filter(|(_, recs)| recs.len() >= 100 && complete(recs, g) && complete(recs, r))
                .map(|(&n, recs)| (n, recs.clone()))
                .collect();
            if usable.is_empty() {
                continue;
            }
            let meds = cross_decile_medians(&usable, g, r)?;
            let mut series: BTreeMap<Group, Vec<(f64, f64)>> = BTreeMap::new();
            for m in &meds {
                t.row(&[
                    "median".into(),
                    g.to_string(),
                    r.to_string(),
                    m.group.to_string(),
                    m.n.to_string(),
                    m.size.to_string(),
                    fmt_num(m.median),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                if m.median.is_finite() && m.median > 0.0 {
                    series.entry(m.group).or_default().push((m.n as f64, m.median));
                }
            }
            for (group, pts) in series {
                if let Ok(fit) = scaling_fit(&pts, AxisMode::LogLinear) {
                    let [k, s, i, a] = fit_cells(&fit);
                    t.row(&["fit".into(), g.to_string(), r.to_string(), group.to_string(), String::new(), String::new(), String::new(), k, s, i, a]);
                }
            }
        }
    }
    Ok(t.text)
}

fn fig5(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance, opts: &ReportOptions) -> String {
    let mut t = Table::new(prov, &["n", "log10_n_calls_lo", "log10_n_calls_hi", "count", "density"]);
    for (&n, recs) in groups {
        let v: Vec<f64> = recs.iter().filter_map(|r| r.n_calls).map(|c| (c as f64).log10()).collect();
        if v.is_empty() {
            continue;
        }
        let h = histogram(&v, &bin_edges(&v, opts.bins));
        for (i, (c, d)) in h.counts.iter().zip(&h.densities).enumerate() {
            t.row(&[n.to_string(), fmt_num(h.edges[i]), fmt_num(h.edges[i + 1]), c.to_string(), fmt_num(*d)]);
        }
    }
    t.text
}

fn fig6(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance, opts: &ReportOptions) -> Result<String, AnalyticsError> {
    let mut t = Table::new(prov, &["row", "n", "quantity", "group", "bin_lo", "bin_hi", "count", "density", "median"]);
    for (&n, recs) in groups {
        if !recs.iter().any(|r| r.satisfiable.is_some()) {
            continue;
        }
        let split = split_by_satisfiability(recs, opts.bins)?;
        for q in SatQuantity::ALL {
            for (label, g) in [("sat", &split.sat), ("unsat", &split.unsat)] {
                if let Some(m) = g.medians.get(&q) {
                    t.row(&["median".into(), n.to_string(), q.name().into(), label.into(), String::new(), String::new(), g.count.to_string(), String::new(), fmt_num(*m)]);
                }
                if let Some(h) = g.histograms.get(&q) {
                    for (i, (c, d)) in h.counts.iter().zip(&h.densities).enumerate() {
                        t.row(&["bin".into(), n.to_string(), q.name().into(), label.into(), fmt_num(h.edges[i]), fmt_num(h.edges[i + 1]), c.to_string(), fmt_num(*d), String::new()]);
                    }
                }
            }
        }
    }
    Ok(t.text)
}

fn fig7(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance) -> String {
    let mut t = Table::new(
        prov,
        &["row", "quantity", "group", "axis", "n", "median", "fit", "residual", "kappa", "stderr", "intercept"],
    );
    for measure in Measure::ALL {
        for (label, flag) in [("sat", true), ("unsat", false)] {
            let pts: Vec<(f64, f64)> = groups
                .iter()
                .filter_map(|(&n, recs)| {
                    let v: Vec<f64> = recs
                        .iter()
                        .filter(|r| r.satisfiable == Some(flag))
                        .filter_map(|r| r.value(measure))
                        .collect();
                    lower_median(&v).filter(|m| m.is_finite() && *m > 0.0).map(|m| (n as f64, m))
                })
                .collect();
            for axis in [AxisMode::LogLinear, AxisMode::LogLog] {
                let Ok(fit) = scaling_fit(&pts, axis) else { continue };
                for (&(n, m), res) in fit.points.iter().zip(&fit.residuals) {
                    t.row(&["point".into(), measure.to_string(), label.into(), axis.name().into(), fmt_num(n), fmt_num(m), fmt_num(fit.predict(n)), fmt_num(*res), String::new(), String::new(), String::new()]);
                }
                let [k, s, i, a] = fit_cells(&fit);
                t.row(&["fit".into(), measure.to_string(), label.into(), a, String::new(), String::new(), String::new(), String::new(), k, s, i]);
            }
        }
    }
    t.text
}

fn appendix(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance) -> String {
    let mut t = Table::new(prov, &["row", "n", "instance_id", "p_avg", "p_infinity", "rho"]);
    for (&n, recs) in groups {
        let both: Vec<&DifficultyRecord> = recs.iter().filter(|r| r.p_avg.is_some() && r.p_infinity.is_some()).collect();
        if both.is_empty() {
            continue;
        }
        for r in &both {
            t.row(&["point".into(), n.to_string(), r.instance_id.clone(), opt(r.p_avg), opt(r.p_infinity), String::new()]);
        }
        let xs: Vec<f64> = both.iter().map(|r| r.p_avg.unwrap()).collect();
        let ys: Vec<f64> = both.iter().map(|r| r.p_infinity.unwrap()).collect();
        if let Ok(rho) = spearman(&xs, &ys) {
            t.row(&["rho".into(), n.to_string(), String::new(), String::new(), String::new(), fmt_num(rho)]);
        }
    }
    t.text
}

fn summary(groups: &BTreeMap<usize, Vec<DifficultyRecord>>, prov: &Provenance, opts: &ReportOptions) -> Result<String, AnalyticsError> {
    let mut s = prov.header();
    let w = &mut s;
    for (&n, recs) in groups {
        let sat = recs.iter().filter(|r| r.satisfiable == Some(true)).count();
        let not_found = recs.iter().filter(|r| r.value(Measure::Aqc) == Some(f64::INFINITY)).count();
        let _ = writeln!(w, "n={n} instances={} satisfiable={sat} t99_not_found={not_found}", recs.len());
        for (x, y) in PAIRS {
            if let Some((rho, k)) = pair_correlation(recs, x, y) {
                let _ = writeln!(w, "  spearman({x},{y})={} over {k}", fmt_num(rho));
            }
        }
    }
    let all: Vec<DifficultyRecord> = groups.values().flatten().cloned().collect();
    let _ = writeln!(
        w,
        "portfolio costs use normalizer={}; costs of different solvers are not in comparable units",
        opts.normalizer.name()
    );
    for (a, b) in PAIRS {
        if !complete(&all, a) || !complete(&all, b) {
            continue;
        }
        let p = portfolio_eval(&all, a, b, opts.normalizer)?;
        let _ = writeln!(
            w,
            "portfolio({a},{b}) total={} median={} max={} | {a} total={} max={} | {b} total={} max={} | median speedup vs {a}={} vs {b}={}",
            fmt_num(p.portfolio.total),
            fmt_num(p.portfolio.median),
            fmt_num(p.portfolio.max),
            fmt_num(p.standalone_a.total),
            fmt_num(p.standalone_a.max),
            fmt_num(p.standalone_b.total),
            fmt_num(p.standalone_b.max),
            fmt_num(p.median_speedup_a),
            fmt_num(p.median_speedup_b),
        );
    }
    Ok(s)
}

/// Renders every table. Keys are file names.
pub fn render_all(
    records: &[DifficultyRecord],
    prov: &Provenance,
    opts: &ReportOptions,
) -> Result<BTreeMap<String, String>, AnalyticsError> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let groups = by_n(&sorted);
    let mut out = BTreeMap::new();
    out.insert("fig2_heatmap.csv".into(), fig2(&groups, prov, opts));
    out.insert("fig3_percentiles.csv".into(), fig3(&groups, prov)?);
    out.insert("fig4_cross.csv".into(), fig4(&groups, prov)?);
    out.insert("fig5_hist.csv".into(), fig5(&groups, prov, opts));
    out.insert("fig6_sat_hist.csv".into(), fig6(&groups, prov, opts)?);
    out.insert("fig7_scaling.csv".into(), fig7(&groups, prov));
    out.insert("appendix_pinf.csv".into(), appendix(&groups, prov));
    out.insert("summary.txt".into(), summary(&groups, prov, opts)?);
    Ok(out)
}
