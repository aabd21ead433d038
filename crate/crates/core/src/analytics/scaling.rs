//! Least-squares exponents of difficulty statistics against problem size,
//! fitted in base-2 logarithms.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisMode {
    /// `log2 value` against `n`.
    LogLinear,
    /// `log2 value` against `log2 n`.
    LogLog,
}

impl AxisMode {
    pub fn name(self) -> &'static str {
        match self {
            AxisMode::LogLinear => "log-linear",
            AxisMode::LogLog => "log-log",
        }
    }

    fn x(self, n: f64) -> f64 {
        match self {
            AxisMode::LogLinear => n,
            AxisMode::LogLog => n.log2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub kappa: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub axis_mode: AxisMode,
    pub points: Vec<(f64, f64)>,
    /// `log2(value) − log2(fit)` per point.
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    /// Fitted value (not its logarithm) at `n`.
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.kappa * self.axis_mode.x(n)).exp2()
    }
}

pub fn scaling_fit(points: &[(f64, f64)], axis_mode: AxisMode) -> Result<ScalingFit, AnalyticsError> {
    if points.len() < 3 {
        return Err(AnalyticsError::InsufficientPoints(points.len()));
    }
    if let Some(&(_, v)) = points.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(AnalyticsError::NonPositiveValue(v));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| axis_mode.x(n)).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.log2()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalyticsError::Degenerate("all points share one abscissa".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let kappa = sxy / sxx;
    let intercept = my - kappa * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + kappa * x)).collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        kappa,
        stderr,
        intercept,
        axis_mode,
        points: points.to_vec(),
        residuals,
    })
}
