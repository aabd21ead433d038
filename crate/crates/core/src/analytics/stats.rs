//! Rank statistics, order-statistic medians and density histograms.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]].total_cmp(&xs[order[i]]).is_eq() {
            j += 1;
        }
        let mean = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = mean;
        }
        i = j;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalyticsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(AnalyticsError::Degenerate(format!(
            "need two equal-length lists of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::Degenerate("constant input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
/// Infinite values are allowed and rank above every finite one.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, AnalyticsError> {
    if xs.len() != ys.len() {
        return Err(AnalyticsError::Degenerate("length mismatch".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(AnalyticsError::Degenerate("NaN in input".into()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Lower-middle order statistic. `None` for an empty slice.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Linear-interpolated sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum BinSpec {
    #[default]
    FreedmanDiaconis,
    Count(usize),
}

const MAX_BINS: usize = 1000;

/// Equal-width bin edges covering the finite values.
pub fn bin_edges(values: &[f64], spec: BinSpec) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    if lo == hi {
        return vec![lo - 0.5, hi + 0.5];
    }
    let bins = match spec {
        BinSpec::Count(k) => k.max(1),
        BinSpec::FreedmanDiaconis => {
            let iqr = quantile(&v, 0.75) - quantile(&v, 0.25);
            let width = 2.0 * iqr / (v.len() as f64).cbrt();
            if width > 0.0 {
                (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS)
            } else {
                ((v.len() as f64).sqrt().ceil() as usize).clamp(1, MAX_BINS)
            }
        }
    };
    let width = (hi - lo) / bins as f64;
    (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `count / (total · width)`, so that the densities integrate to one.
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Histogram of the finite values on the given edges. The last bin is closed.
pub fn histogram(values: &[f64], edges: &[f64]) -> Histogram {
    let bins = edges.len().saturating_sub(1);
    let mut counts = vec![0u64; bins];
    if bins > 0 {
        for &x in values.iter().filter(|x| x.is_finite()) {
            if x < edges[0] || x > edges[bins] {
                continue;
            }
            let i = edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
            counts[i] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| if total == 0 { 0.0 } else { c as f64 / (total as f64 * (e[1] - e[0])) })
        .collect();
    Histogram {
        edges: edges.to_vec(),
        counts,
        densities,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spearman_hand_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 5.0, 9.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        // d² = 4 + 1 + 1 = 6, 1 − 36/24
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap() + 0.5).abs() < 1e-15);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn ties_get_mean_rank() {
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0, f64::INFINITY]), vec![2.5, 1.0, 2.5, 4.0]);
    }

    #[test]
    fn ties_against_textbook_formula() {
        // Pearson on mid-ranks computed by hand.
        let xs = [1.0, 2.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 2.0, 4.0];
        let rx = [1.0, 2.5, 2.5, 4.0];
        let ry = [1.0, 3.0, 2.0, 4.0];
        let mean = 2.5;
        let num: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
        let den = (rx.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            * ry.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>())
        .sqrt();
        assert!((spearman(&xs, &ys).unwrap() - num / den).abs() < 1e-15);
    }

    #[test]
    fn medians() {
        assert_eq!(lower_median(&[3.0, 1.0, 2.0, 4.0]), Some(2.0));
        assert_eq!(lower_median(&[7.0]), Some(7.0));
        assert_eq!(lower_median(&[]), None);
        assert_eq!(lower_median(&[1.0, f64::INFINITY, f64::INFINITY]), Some(f64::INFINITY));
    }

    #[test]
    fn histogram_mass() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 37.0).collect();
        let h = histogram(&v, &bin_edges(&v, BinSpec::FreedmanDiaconis));
        assert_eq!(h.total(), 1000);
        assert!((h.integral() - 1.0).abs() < 1e-9);
        let h = histogram(&[2.0, 2.0], &bin_edges(&[2.0, 2.0], BinSpec::default()));
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert_eq!(histogram(&[], &[]).total(), 0);
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariance(xs in prop::collection::vec(-1e3f64..1e3, 3..40), seed in any::<u64>()) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + ((seed >> (i % 60)) & 1) as f64).collect();
            prop_assume!(xs.iter().any(|&x| x != xs[0]) && ys.iter().any(|&y| y != ys[0]));
            let base = spearman(&xs, &ys).unwrap();
            let tx: Vec<f64> = xs.iter().map(|x| x.powi(3) + 2.0).collect();
            let ty: Vec<f64> = ys.iter().map(|y| (y / 10.0).exp()).collect();
            prop_assert!((spearman(&tx, &ty).unwrap() - base).abs() < 1e-12);
            prop_assert!(base.abs() <= 1.0);
        }

        #[test]
        fn histogram_integrates_to_one(v in prop::collection::vec(-50f64..50.0, 1..300), k in 1usize..40) {
            for spec in [BinSpec::FreedmanDiaconis, BinSpec::Count(k)] {
                let h = histogram(&v, &bin_edges(&v, spec));
                prop_assert_eq!(h.total() as usize, v.len());
                prop_assert!((h.integral() - 1.0).abs() < 1e-9);
            }
        }
    }
}
