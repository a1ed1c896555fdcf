use crate::error::{Error, Result};
use crate::labels::Ternary;

/// Non-masked rows of one label sorted by score, with tie groups, so that
/// bootstrap resamples can be scored in linear time from row weights.
#[derive(Debug, Clone)]
pub struct RankedLabel {
    rows: Vec<usize>,
    positive: Vec<bool>,
    /// Index of the first row of each row's tie group.
    group_start: Vec<usize>,
    n_rows: usize,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RankedLabel {
    pub fn new(scores: &[f64], labels: &[Ternary]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Invalid(format!("non-finite score {s}")));
        }
        let mut rows: Vec<usize> = (0..scores.len()).filter(|&i| !labels[i].is_masked()).collect();
        rows.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let positive: Vec<bool> = rows.iter().map(|&i| labels[i].is_positive()).collect();
        let mut group_start = vec![0; rows.len()];
        for k in 1..rows.len() {
            group_start[k] = if scores[rows[k]] == scores[rows[k - 1]] { group_start[k - 1] } else { k };
        }
        let n_pos = positive.iter().filter(|&&p| p).count();
        Ok(Self {
            n_neg: rows.len() - n_pos,
            n_rows: scores.len(),
            rows,
            positive,
            group_start,
            n_pos,
        })
    }

    pub fn is_defined(&self) -> bool {
        self.n_pos > 0 && self.n_neg > 0
    }

    /// AUROC of a resample where row `i` appears `weights[i]` times;
    /// `None` when the resample lacks one class.
    pub fn weighted(&self, weights: &[u32]) -> Option<f64> {
        let (mut below, mut pos_sum, mut neg_sum, mut acc) = (0.0, 0.0, 0.0, 0.0);
        let n = self.rows.len();
        let mut k = 0;
        while k < n {
            let start = k;
            let (mut gp, mut gn) = (0.0, 0.0);
            while k < n && self.group_start[k] == start {
                let w = weights[self.rows[k]] as f64;
                if self.positive[k] {
                    gp += w;
                } else {
                    gn += w;
                }
                k += 1;
            }
            acc += gp * (below + 0.5 * gn);
            below += gn;
            pos_sum += gp;
            neg_sum += gn;
        }
        (pos_sum > 0.0 && neg_sum > 0.0).then(|| acc / (pos_sum * neg_sum))
    }

    pub fn point(&self) -> Option<f64> {
        self.weighted(&vec![1; self.n_rows])
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Masked entries are ignored.
pub fn auroc(scores: &[f64], labels: &[Ternary]) -> Result<f64> {
    let r = RankedLabel::new(scores, labels)?;
    r.point().ok_or_else(|| {
        Error::UndefinedMetric(format!("AUROC needs both classes ({} positive, {} negative)", r.n_pos, r.n_neg))
    })
}

/// Unweighted mean over per-label values, skipping undefined labels.
pub fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.into_iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// `scores[label][row]` against `labels[label][row]`.
pub fn macro_auroc(scores: &[Vec<f64>], labels: &[Vec<Ternary>]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} score columns for {} label columns", scores.len(), labels.len())));
    }
    let per: Vec<Option<f64>> = scores
        .iter()
        .zip(labels)
        .map(|(s, l)| Ok(RankedLabel::new(s, l)?.point()))
        .collect::<Result<_>>()?;
    mean_defined(per).ok_or_else(|| Error::UndefinedMetric("no label has both classes".into()))
}
