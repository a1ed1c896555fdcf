#![allow(dead_code)]

use edbench::labels::Ternary;
use edbench::models::nn::{masked_bce, DeepNet, Modality, NetInput, NetworkShape, TabularInput};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central finite differences of `f` at `x` for the coordinates in `idx`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], idx: &[usize], h: f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    idx.iter()
        .map(|&i| {
            buf[i] = x[i] + h;
            let up = f(&buf);
            buf[i] = x[i] - h;
            let down = f(&buf);
            buf[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Worst elementwise relative error, with a floor on the denominator so
/// coordinates whose true gradient is essentially zero are compared
/// absolutely.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Evenly spread sample of at most `n` indices out of `0..len`.
pub fn spread(len: usize, n: usize) -> Vec<usize> {
    if len <= n {
        return (0..len).collect();
    }
    (0..n).map(|i| i * len / n).collect()
}

pub fn tiny_shape(modality: Modality) -> NetworkShape {
    NetworkShape {
        modality,
        leads: 3,
        d_model: 8,
        d_state: 4,
        n_blocks: 2,
        numeric_dim: 5,
        cardinalities: [3, 4, 6],
        embed_dim: 2,
        mlp_layers: 3,
        n_labels: 4,
    }
}

pub const LABELS: [Ternary; 4] = [Ternary::Positive, Ternary::Negative, Ternary::Masked, Ternary::Positive];

/// Worst relative error of every parameter block and of the input
/// gradients, for one network at tiny dimensions.
pub fn gradient_errors(modality: Modality) -> Vec<(String, f64)> {
    let net = DeepNet::new(tiny_shape(modality));
    let mut params = net.init(11);
    // Move the state-space step sizes away from their tiny initial values so
    // the recurrence actually mixes over the short test sequence.
    for spec in net.layout().specs() {
        if spec.name.ends_with("log_dt") {
            for v in &mut params[spec.range()] {
                *v = -1.5;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let wave = Array2::from_shape_fn((3, 64), |_| rng.random_range(-1.0..1.0));
    let numeric: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cat = [1usize, 3, 2];

    let loss_at = |p: &[f64], w: &Array2<f64>, num: &[f64]| -> f64 {
        let input = NetInput {
            waveform: modality.uses_waveform().then(|| w.view()),
            tabular: modality.uses_tabular().then_some(TabularInput {
                numeric: num,
                categorical: cat,
            }),
        };
        let (logits, _) = net.forward(p, input).unwrap();
        masked_bce(&logits, &LABELS).unwrap().0
    };

    let input = NetInput {
        waveform: modality.uses_waveform().then(|| wave.view()),
        tabular: modality.uses_tabular().then_some(TabularInput {
            numeric: &numeric,
            categorical: cat,
        }),
    };
    let (logits, cache) = net.forward(&params, input).unwrap();
    let (_, g_logits) = masked_bce(&logits, &LABELS).unwrap();
    let mut errors = vec![("masked logit gradient".to_string(), g_logits[2].abs())];
    let mut grads = vec![0.0; params.len()];
    let g_in = net.backward(&params, &cache, &g_logits, &mut grads);

    for spec in net.layout().specs() {
        let idx: Vec<usize> = spread(spec.range().len(), 12)
            .into_iter()
            .map(|i| spec.offset + i)
            .collect();
        let numeric_fd = central_diff(&mut |p| loss_at(p, &wave, &numeric), &params, &idx, 1e-6);
        let analytic: Vec<f64> = idx.iter().map(|&i| grads[i]).collect();
        errors.push((spec.name.clone(), max_rel_error(&analytic, &numeric_fd, 1e-6)));
    }
    if let Some(gw) = g_in.waveform {
        let flat: Vec<f64> = wave.iter().copied().collect();
        let idx = spread(flat.len(), 40);
        let fd = central_diff(
            &mut |x| loss_at(&params, &Array2::from_shape_vec((3, 64), x.to_vec()).unwrap(), &numeric),
            &flat,
            &idx,
            1e-6,
        );
        let analytic: Vec<f64> = idx.iter().map(|&i| gw.as_slice().unwrap()[i]).collect();
        errors.push(("input waveform".into(), max_rel_error(&analytic, &fd, 1e-6)));
    }
    if let Some(gn) = g_in.numeric {
        let idx: Vec<usize> = (0..5).collect();
        let fd = central_diff(&mut |x| loss_at(&params, &wave, x), &numeric, &idx, 1e-6);
        errors.push(("input numeric".into(), max_rel_error(gn.as_slice().unwrap(), &fd, 1e-6)));
    }
    errors
}
