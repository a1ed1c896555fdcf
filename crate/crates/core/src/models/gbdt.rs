//! Histogram gradient-boosted trees for binary logistic loss.
//!
//! Split gain, leaf weights and the learned default direction for missing
//! values follow the usual second-order boosting formulation.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub max_bins: usize,
    pub base_score: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            eta: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            max_bins: 256,
            base_score: 0.5,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(Error::Config("n_trees and max_depth must be positive".into()));
        }
        if !(self.eta > 0.0) || !(self.lambda >= 0.0) || !(self.min_child_weight >= 0.0) || !(self.gamma >= 0.0) {
            return Err(Error::Config("eta must be positive; lambda, gamma, min_child_weight non-negative".into()));
        }
        if !(2..=256).contains(&self.max_bins) {
            return Err(Error::Config(format!("max_bins {} outside 2..=256", self.max_bins)));
        }
        if !(self.base_score > 0.0 && self.base_score < 1.0) {
            return Err(Error::Config("base_score must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Training matrix quantised per column. Column `f` uses bins
/// `0..=cuts[f].len()` for values and `cuts[f].len() + 1` for NaN.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    /// Column-major bin indices.
    bins: Vec<Vec<u8>>,
    /// Per column, sorted cut points; bin `b` holds `cuts[b-1] <= x < cuts[b]`.
    cuts: Vec<Vec<f64>>,
    /// Start of each column in a flat histogram.
    offsets: Vec<usize>,
}

impl BinnedMatrix {
    pub fn new(x: ArrayView2<f64>, max_bins: usize) -> Self {
        let max_value_bins = (max_bins - 1).min(255);
        let mut bins = Vec::with_capacity(x.ncols());
        let mut cuts = Vec::with_capacity(x.ncols());
        let mut offsets = Vec::with_capacity(x.ncols() + 1);
        offsets.push(0);
        for col in x.columns() {
            let mut v: Vec<f64> = col.iter().copied().filter(|x| !x.is_nan()).collect();
            v.sort_by(f64::total_cmp);
            let mut uniq = v.clone();
            uniq.dedup();
            let c: Vec<f64> = if uniq.len() <= max_value_bins {
                uniq.into_iter().skip(1).collect()
            } else {
                let mut c: Vec<f64> =
                    (1..max_value_bins).map(|j| v[j * v.len() / max_value_bins]).collect();
                c.dedup();
                if c.first() == v.first() {
                    c.remove(0);
                }
                c
            };
            let missing = (c.len() + 1) as u8;
            bins.push(
                col.iter()
                    .map(|&x| if x.is_nan() { missing } else { c.partition_point(|&t| t <= x) as u8 })
                    .collect(),
            );
            offsets.push(offsets.last().expect("non-empty") + c.len() + 2);
            cuts.push(c);
        }
        Self {
            n_rows: x.nrows(),
            bins,
            cuts,
            offsets,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.bins.len()
    }

    fn is_missing(&self, f: usize, b: u8) -> bool {
        b as usize == self.cuts[f].len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        /// Values strictly below go left.
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(w) => return *w,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let x = row[*feature];
                    let go_left = if x.is_nan() { *default_left } else { x < *threshold };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster {
    pub base_margin: f64,
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

impl Booster {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.margin(row)).exp())
    }
}

/// Gradient and hessian sums per (column, bin), flattened.
struct Hist {
    gh: Vec<(f64, f64)>,
    /// Built directly from rows, so cells outside those rows are exactly 0.
    exact: bool,
}

impl Hist {
    /// Takes a zeroed buffer from `pool` when one is available.
    fn build(data: &BinnedMatrix, rows: &[usize], g: &[f64], h: &[f64], pool: &mut Vec<Vec<(f64, f64)>>) -> Self {
        let mut gh = pool
            .pop()
            .unwrap_or_else(|| vec![(0.0, 0.0); *data.offsets.last().expect("non-empty")]);
        for (f, col) in data.bins.iter().enumerate() {
            let hist = &mut gh[data.offsets[f]..data.offsets[f + 1]];
            for &r in rows {
                let cell = &mut hist[col[r] as usize];
                cell.0 += g[r];
                cell.1 += h[r];
            }
        }
        Self { gh, exact: true }
    }

    fn subtract(mut self, other: &Hist) -> Self {
        for (a, b) in self.gh.iter_mut().zip(&other.gh) {
            a.0 -= b.0;
            a.1 -= b.1;
        }
        self.exact = false;
        self
    }

    /// Zeroes the buffer, touching only the cells of `rows` when that is
    /// cheaper, and returns it to the pool.
    fn recycle(mut self, data: &BinnedMatrix, rows: &[usize], pool: &mut Vec<Vec<(f64, f64)>>) {
        if self.exact && rows.len() * data.n_cols() < self.gh.len() {
            for (f, col) in data.bins.iter().enumerate() {
                let off = data.offsets[f];
                for &r in rows {
                    self.gh[off + col[r] as usize] = (0.0, 0.0);
                }
            }
        } else {
            self.gh.fill((0.0, 0.0));
        }
        pool.push(self.gh);
    }
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
    default_left: bool,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn best_split(data: &BinnedMatrix, hist: &Hist, g_tot: f64, h_tot: f64, cfg: &TreeConfig) -> Option<Candidate> {
    let parent = score(g_tot, h_tot, cfg.lambda);
    let mut best: Option<Candidate> = None;
    for f in 0..data.n_cols() {
        let n_cuts = data.cuts[f].len();
        if n_cuts == 0 {
            continue;
        }
        let cells = &hist.gh[data.offsets[f]..data.offsets[f + 1]];
        let (gm, hm) = cells[n_cuts + 1];
        let (mut gl, mut hl) = (0.0, 0.0);
        for (b, &(cg, ch)) in cells[..n_cuts].iter().enumerate() {
            if ch == 0.0 {
                // Same partition as the previous boundary.
                continue;
            }
            gl += cg;
            hl += ch;
            for default_left in [false, true] {
                if default_left && hm == 0.0 {
                    continue;
                }
                let (gl2, hl2) = if default_left { (gl + gm, hl + hm) } else { (gl, hl) };
                let (gr2, hr2) = (g_tot - gl2, h_tot - hl2);
                if hl2 < cfg.min_child_weight || hr2 < cfg.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (score(gl2, hl2, cfg.lambda) + score(gr2, hr2, cfg.lambda) - parent) - cfg.gamma;
                if gain > 1e-12 && best.as_ref().is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        bin: b,
                        default_left,
                    });
                }
            }
        }
    }
    best
}

fn grow_tree(
    data: &BinnedMatrix,
    rows: Vec<usize>,
    g: &[f64],
    h: &[f64],
    cfg: &TreeConfig,
    pool: &mut Vec<Vec<(f64, f64)>>,
) -> Tree {
    struct Pending {
        node: usize,
        rows: Vec<usize>,
        /// Absent when the node cannot be split.
        hist: Option<Hist>,
        depth: usize,
    }
    let splittable = |rows: &[usize], depth: usize| {
        depth < cfg.max_depth && rows.len() >= 2 && rows.iter().map(|&r| h[r]).sum::<f64>() >= 2.0 * cfg.min_child_weight
    };
    let mut nodes = vec![Node::Leaf(0.0)];
    let hist = splittable(&rows, 0).then(|| Hist::build(data, &rows, g, h, pool));
    let mut stack = vec![Pending {
        node: 0,
        rows,
        hist,
        depth: 0,
    }];
    while let Some(p) = stack.pop() {
        let g_tot: f64 = p.rows.iter().map(|&r| g[r]).sum();
        let h_tot: f64 = p.rows.iter().map(|&r| h[r]).sum();
        let leaf = -g_tot / (h_tot + cfg.lambda) * cfg.eta;
        let split = p.hist.as_ref().and_then(|hist| best_split(data, hist, g_tot, h_tot, cfg));
        let Some(c) = split else {
            if let Some(hist) = p.hist {
                hist.recycle(data, &p.rows, pool);
            }
            nodes[p.node] = Node::Leaf(leaf);
            continue;
        };
        let parent_hist = p.hist.expect("a split implies a histogram");
        let col = &data.bins[c.feature];
        let (lrows, rrows): (Vec<usize>, Vec<usize>) = p.rows.iter().partition(|&&r| {
            let b = col[r];
            if data.is_missing(c.feature, b) {
                c.default_left
            } else {
                (b as usize) <= c.bin
            }
        });
        let depth = p.depth + 1;
        let (split_l, split_r) = (splittable(&lrows, depth), splittable(&rrows, depth));
        let (lh, rh) = match (split_l, split_r) {
            (false, false) => {
                parent_hist.recycle(data, &p.rows, pool);
                (None, None)
            }
            (true, false) => {
                parent_hist.recycle(data, &p.rows, pool);
                (Some(Hist::build(data, &lrows, g, h, pool)), None)
            }
            (false, true) => {
                parent_hist.recycle(data, &p.rows, pool);
                (None, Some(Hist::build(data, &rrows, g, h, pool)))
            }
            (true, true) => {
                if lrows.len() <= rrows.len() {
                    let small = Hist::build(data, &lrows, g, h, pool);
                    let large = parent_hist.subtract(&small);
                    (Some(small), Some(large))
                } else {
                    let small = Hist::build(data, &rrows, g, h, pool);
                    let large = parent_hist.subtract(&small);
                    (Some(large), Some(small))
                }
            }
        };
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf(0.0));
        nodes.push(Node::Leaf(0.0));
        nodes[p.node] = Node::Split {
            feature: c.feature,
            threshold: data.cuts[c.feature][c.bin],
            default_left: c.default_left,
            left: li,
            right: ri,
        };
        stack.push(Pending {
            node: ri,
            rows: rrows,
            hist: rh,
            depth,
        });
        stack.push(Pending {
            node: li,
            rows: lrows,
            hist: lh,
            depth,
        });
    }
    Tree { nodes }
}

/// Fits one booster on the rows listed in `rows` with 0/1 targets `y`
/// aligned to `rows`.
pub fn fit_booster(data: &BinnedMatrix, rows: &[usize], y: &[f64], cfg: &TreeConfig) -> Result<Booster> {
    cfg.validate()?;
    if rows.len() != y.len() {
        return Err(Error::Shape(format!("{} rows for {} targets", rows.len(), y.len())));
    }
    let base_margin = (cfg.base_score / (1.0 - cfg.base_score)).ln();
    let mut margin = vec![base_margin; data.n_rows()];
    let mut g = vec![0.0; data.n_rows()];
    let mut h = vec![0.0; data.n_rows()];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut pool = Vec::new();
    for _ in 0..cfg.n_trees {
        for (&r, &t) in rows.iter().zip(y) {
            let p = 1.0 / (1.0 + (-margin[r]).exp());
            g[r] = p - t;
            h[r] = (p * (1.0 - p)).max(1e-16);
        }
        let tree = grow_tree(data, rows.to_vec(), &g, &h, cfg, &mut pool);
        if let [Node::Leaf(w)] = tree.nodes.as_slice() {
            if w.abs() < 1e-12 {
                break;
            }
        }
        for &r in rows {
            margin[r] += predict_binned(&tree, data, r);
        }
        trees.push(tree);
    }
    Ok(Booster {
        base_margin,
        trees,
        n_features: data.n_cols(),
    })
}

fn predict_binned(tree: &Tree, data: &BinnedMatrix, row: usize) -> f64 {
    let mut i = 0;
    loop {
        match &tree.nodes[i] {
            Node::Leaf(w) => return *w,
            Node::Split {
                feature,
                threshold,
                default_left,
                left,
                right,
            } => {
                let b = data.bins[*feature][row];
                let go_left = if data.is_missing(*feature, b) {
                    *default_left
                } else {
                    let cut = data.cuts[*feature].partition_point(|&t| t < *threshold);
                    (b as usize) <= cut
                };
                i = if go_left { *left } else { *right };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn separable_label_is_learned() {
        let n = 200;
        let x = Array2::from_shape_fn((n, 3), |(i, j)| match j {
            0 => i as f64,
            1 => ((i * 7) % 13) as f64,
            _ => if i % 5 == 0 { f64::NAN } else { (i % 3) as f64 },
        });
        let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i >= 120))).collect();
        let data = BinnedMatrix::new(x.view(), 256);
        let rows: Vec<usize> = (0..n).collect();
        let b = fit_booster(&data, &rows, &y, &TreeConfig::default()).unwrap();
        for i in 0..n {
            let p = b.predict_proba(x.row(i).as_slice().unwrap());
            assert_eq!(p > 0.5, y[i] == 1.0, "row {i}: {p}");
        }
    }

    #[test]
    fn missing_values_learn_a_direction() {
        let n = 100;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| if i % 2 == 0 { f64::NAN } else { (i % 7) as f64 });
        let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
        let data = BinnedMatrix::new(x.view(), 256);
        let rows: Vec<usize> = (0..n).collect();
        let b = fit_booster(&data, &rows, &y, &TreeConfig::default()).unwrap();
        assert!(b.predict_proba(&[f64::NAN]) > 0.9);
        assert!(b.predict_proba(&[3.0]) < 0.1);
    }

    #[test]
    fn binned_and_raw_prediction_agree() {
        let n = 300;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i * (j + 3) * 37) % 101) as f64 / 7.0);
        let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from((i * 37) % 101 > 50))).collect();
        let data = BinnedMatrix::new(x.view(), 16);
        let rows: Vec<usize> = (0..n).collect();
        let b = fit_booster(&data, &rows, &y, &TreeConfig::default()).unwrap();
        for t in &b.trees {
            for r in 0..n {
                assert_eq!(t.predict(x.row(r).as_slice().unwrap()), predict_binned(t, &data, r));
            }
        }
    }
}
