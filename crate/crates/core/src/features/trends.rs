//! Nine summary statistics of an irregularly sampled series.

use serde::{Deserialize, Serialize};

pub const STATISTICS: [&str; 9] = [
    "mean",
    "median",
    "min",
    "max",
    "std",
    "first",
    "last",
    "rate_of_change",
    "slope",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrendAggregate {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
    pub first: Option<f64>,
    pub last: Option<f64>,
    /// `(last - first) / (t_last - t_first)` in units per minute.
    pub rate_of_change: Option<f64>,
    /// Least-squares slope of value on minutes.
    pub slope: Option<f64>,
}

impl TrendAggregate {
    pub fn get(&self, stat: &str) -> Option<Option<f64>> {
        Some(match stat {
            "mean" => self.mean,
            "median" => self.median,
            "min" => self.min,
            "max" => self.max,
            "std" => self.std,
            "first" => self.first,
            "last" => self.last,
            "rate_of_change" => self.rate_of_change,
            "slope" => self.slope,
            _ => return None,
        })
    }
}

pub fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// `series` holds `(minutes since arrival, value)` pairs. Points are ordered
/// by time (stable, so equal times keep their input order).
pub fn aggregate_trends(series: &[(f64, f64)]) -> TrendAggregate {
    if series.is_empty() {
        return TrendAggregate::default();
    }
    let mut pts = series.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len() as f64;
    let mut values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let (t0, v0) = pts[0];
    let (t1, v1) = pts[pts.len() - 1];
    let (rate_of_change, slope) = if pts.len() >= 2 && t1 != t0 {
        let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - mean)).sum();
        (Some((v1 - v0) / (t1 - t0)), Some(sxy / sxx))
    } else {
        (None, None)
    };
    values.sort_by(f64::total_cmp);
    TrendAggregate {
        mean: Some(mean),
        median: median(&values),
        min: values.first().copied(),
        max: values.last().copied(),
        std: Some(var.sqrt()),
        first: Some(v0),
        last: Some(v1),
        rate_of_change,
        slope,
    }
}
