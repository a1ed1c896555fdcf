//! Gradient-boosted trees on a toy table with missing values: histogram
//! binning, the learned missing-value direction and held-out AUROC.

use edbench::eval::auroc;
use edbench::labels::Ternary;
use edbench::models::gbdt::{fit_booster, BinnedMatrix, Node};
use edbench::models::TreeConfig;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> edbench::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 2000;
    let mut x = Array2::zeros((n, 4));
    let mut y = vec![0.0; n];
    for i in 0..n {
        for j in 0..4 {
            x[[i, j]] = rng.random_range(-1.0..1.0);
        }
        let risk = 1.5 * x[[i, 0]] - x[[i, 1]] * x[[i, 2]] + rng.random_range(-0.5..0.5);
        y[i] = f64::from(risk > 0.3);
        // Feature 3 goes missing mostly for positives, so missingness is informative.
        if rng.random_bool(if y[i] > 0.5 { 0.6 } else { 0.1 }) {
            x[[i, 3]] = f64::NAN;
        }
    }

    let cfg = TreeConfig {
        n_trees: 60,
        max_depth: 4,
        ..Default::default()
    };
    let data = BinnedMatrix::new(x.view(), cfg.max_bins);
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|i| i % 5 != 0);
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let booster = fit_booster(&data, &train, &y_train, &cfg)?;

    let scores: Vec<f64> = test.iter().map(|&i| booster.predict_proba(x.row(i).as_slice().unwrap())).collect();
    let labels: Vec<Ternary> = test.iter().map(|&i| Ternary::from_bool(y[i] > 0.5)).collect();
    println!("{} trees, held-out AUROC {:.4}", booster.trees.len(), auroc(&scores, &labels)?);

    let missing_splits = booster
        .trees
        .iter()
        .flat_map(|t| &t.nodes)
        .filter(|n| matches!(n, Node::Split { feature: 3, .. }))
        .count();
    println!("splits on the partly missing feature: {missing_splits}");
    Ok(())
}
