//! Percentile bootstrap intervals for per-label and macro AUROC, and the
//! relative-improvement figure used to compare two models.

use edbench::eval::{bootstrap_auroc, relative_improvement};
use edbench::labels::Ternary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> edbench::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 400;
    let names: Vec<String> = ["strong", "weak", "noise"].map(String::from).to_vec();
    let signal = [2.0, 0.6, 0.0];
    let mut scores = vec![Vec::with_capacity(n); 3];
    let mut labels = vec![Vec::with_capacity(n); 3];
    for _ in 0..n {
        for k in 0..3 {
            let y = rng.random_bool(0.3);
            let s = if y { signal[k] } else { 0.0 } + rng.random_range(-1.5..1.5);
            scores[k].push(s);
            // A few rows per label carry no usable target.
            labels[k].push(if rng.random_bool(0.05) { Ternary::Masked } else { Ternary::from_bool(y) });
        }
    }

    let res = bootstrap_auroc(&names, &scores, &labels, 1000, 0.95, 0)?;
    for l in &res.labels {
        let iv = l.auroc.expect("both classes present");
        println!(
            "{:<7} {:.4} [{:.4}, {:.4}]  ({} pos / {} neg)",
            l.name, iv.point, iv.lo, iv.hi, l.n_pos, l.n_neg
        );
    }
    let m = res.macro_auroc;
    println!("macro   {:.4} [{:.4}, {:.4}]", m.point, m.lo, m.hi);

    let again = bootstrap_auroc(&names, &scores, &labels, 1000, 0.95, 0)?;
    println!("same seed, same intervals: {}", again == res);
    println!("0.9100 over 0.8300 is {:+.2}%", relative_improvement(0.91, 0.83)?);
    Ok(())
}
