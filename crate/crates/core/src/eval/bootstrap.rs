use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::auroc::{mean_defined, RankedLabel};
use crate::error::{Error, Result};
use crate::labels::Ternary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub name: String,
    /// `None` when the test rows lack one class.
    pub auroc: Option<Interval>,
    pub n_pos: usize,
    pub n_neg: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub labels: Vec<LabelScore>,
    pub macro_auroc: Interval,
    pub n_iter: usize,
    pub level: f64,
}

/// Resample multiplicities, drawn before any metric is computed so the
/// result does not depend on evaluation order.
pub fn resample_weights(n_rows: usize, n_iter: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_iter)
        .map(|_| {
            let mut w = vec![0u32; n_rows];
            for _ in 0..n_rows {
                w[rng.random_range(0..n_rows)] += 1;
            }
            w
        })
        .collect()
}

/// Linear-interpolation percentile of sorted values, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn interval(point: f64, mut draws: Vec<f64>, level: f64) -> Interval {
    if draws.is_empty() {
        return Interval { point, lo: point, hi: point };
    }
    draws.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Interval {
        point,
        lo: percentile(&draws, a).min(point),
        hi: percentile(&draws, 1.0 - a).max(point),
    }
}

/// Percentile bootstrap of per-label and macro AUROC over test rows.
/// Labels that are undefined in a resample are left out of that
/// resample's macro and of their own interval.
///
/// The interval is widened to contain the point estimate, which a skewed
/// percentile interval can otherwise miss.
pub fn bootstrap_auroc(
    names: &[String],
    scores: &[Vec<f64>],
    labels: &[Vec<Ternary>],
    n_iter: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    if names.len() != scores.len() || scores.len() != labels.len() {
        return Err(Error::Shape("names, scores and labels differ in label count".into()));
    }
    let n_rows = labels.first().map_or(0, Vec::len);
    if n_rows == 0 {
        return Err(Error::Data("bootstrap needs at least one test row".into()));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Config(format!("confidence level {level} outside (0, 1)")));
    }
    let ranked: Vec<RankedLabel> = scores
        .iter()
        .zip(labels)
        .map(|(s, l)| RankedLabel::new(s, l))
        .collect::<Result<_>>()?;
    let points: Vec<Option<f64>> = ranked.iter().map(RankedLabel::point).collect();
    let macro_point =
        mean_defined(points.iter().copied()).ok_or_else(|| Error::UndefinedMetric("no label has both classes".into()))?;

    let weights = resample_weights(n_rows, n_iter, seed);
    let mut per_label: Vec<Vec<f64>> = vec![Vec::with_capacity(n_iter); ranked.len()];
    let mut macros = Vec::with_capacity(n_iter);
    for w in &weights {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (r, draws) in ranked.iter().zip(per_label.iter_mut()) {
            if let Some(v) = r.weighted(w) {
                draws.push(v);
                sum += v;
                n += 1;
            }
        }
        if n > 0 {
            macros.push(sum / n as f64);
        }
    }
    let labels = names
        .iter()
        .zip(&ranked)
        .zip(points.iter().zip(per_label))
        .map(|((name, r), (point, draws))| LabelScore {
            name: name.clone(),
            auroc: point.map(|p| interval(p, draws, level)),
            n_pos: r.n_pos,
            n_neg: r.n_neg,
        })
        .collect();
    Ok(BootstrapResult {
        labels,
        macro_auroc: interval(macro_point, macros, level),
        n_iter,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.25), 2.0);
        assert_eq!(percentile(&v, 0.1), 1.4);
        assert_eq!(percentile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn weights_sum_to_rows() {
        let w = resample_weights(17, 5, 1);
        assert!(w.iter().all(|w| w.iter().sum::<u32>() == 17));
        assert_eq!(w, resample_weights(17, 5, 1));
    }
}
